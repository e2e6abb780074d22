#include "sdfedit/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace sdfedit::nn {

namespace {

double evaluate(const ScalarGraph& graph) {
  Tape tape;
  Var out = graph(tape);
  const Tensor& v = tape.value(out);
  if (v.size() != 1) {
    throw ShapeError("grad_check needs a scalar output, got " + to_string(v.shape()));
  }
  return v[0];
}

}  // namespace

GradCheckResult grad_check(const ScalarGraph& graph, std::span<Parameter* const> params,
                           const GradCheckOptions& options) {
  std::vector<Parameter*> list(params.begin(), params.end());
  for (Parameter* p : list) p->grad = Tensor::zeros_like(p->value);
  {
    Tape tape;
    Var out = graph(tape);
    if (tape.value(out).size() != 1) {
      throw ShapeError("grad_check needs a scalar output, got " +
                       to_string(tape.value(out).shape()));
    }
    tape.backward(out);
    tape.accumulate(list);
  }

  GradCheckResult result;
  std::mt19937_64 rng(options.seed);
  for (Parameter* p : list) {
    std::vector<std::size_t> idx(p->value.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (options.max_entries && idx.size() > options.max_entries) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(options.max_entries);
    }
    double diff_max = 0.0, a_max = 0.0, n_max = 0.0;
    for (std::size_t i : idx) {
      const double saved = p->value[i];
      p->value[i] = saved + options.step;
      const double fp = evaluate(graph);
      p->value[i] = saved - options.step;
      const double fm = evaluate(graph);
      p->value[i] = saved;
      const double numeric = (fp - fm) / (2.0 * options.step);
      const double analytic = p->grad[i];
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), options.floor});
      const double err = std::fabs(analytic - numeric) / denom;
      diff_max = std::max(diff_max, std::fabs(analytic - numeric));
      a_max = std::max(a_max, std::fabs(analytic));
      n_max = std::max(n_max, std::fabs(numeric));
      ++result.checked;
      if (err > result.max_relative_error || result.checked == 1) {
        result.max_relative_error = err;
        result.worst_parameter = p->name;
        result.worst_index = i;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
    const double tensor_err = diff_max / std::max({a_max, n_max, options.floor});
    if (tensor_err > result.max_tensor_relative_error || result.worst_tensor.empty()) {
      result.max_tensor_relative_error = tensor_err;
      result.worst_tensor = p->name;
    }
  }
  return result;
}

}  // namespace sdfedit::nn
