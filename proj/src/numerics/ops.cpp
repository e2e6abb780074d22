#include "sdfedit/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace sdfedit::nn {

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

template <typename F, typename D>
Var unary(Tape& t, Var a, F f, D dfdx) {
  const Tensor& x = t.value(a);
  Tensor y = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  Var parents[] = {a};
  return t.record(std::move(y), parents, [a, dfdx](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(a);
    Tensor& ga = tp.grad_slot(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx(xv[i]);
  });
}

// Kept strictly inside (0, 1) even where the exact value rounds to an end.
double sigmoid_scalar(double x) {
  constexpr double kHi = 1.0 - 0x1p-53;
  constexpr double kLo = std::numeric_limits<double>::denorm_min();
  if (x >= 0) return std::min(1.0 / (1.0 + std::exp(-x)), kHi);
  const double e = std::exp(x);
  return std::max(e / (1.0 + e), kLo);
}

}  // namespace

Var add(Tape& t, Var a, Var b) {
  require_same(t.value(a), t.value(b), "add");
  Tensor y = t.value(a);
  y.matrix() += t.value(b).matrix();
  Var parents[] = {a, b};
  return t.record(std::move(y), parents, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) tp.grad_slot(a).matrix() += g.matrix();
    if (tp.requires_grad(b)) tp.grad_slot(b).matrix() += g.matrix();
  });
}

Var sub(Tape& t, Var a, Var b) {
  require_same(t.value(a), t.value(b), "sub");
  Tensor y = t.value(a);
  y.matrix() -= t.value(b).matrix();
  Var parents[] = {a, b};
  return t.record(std::move(y), parents, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) tp.grad_slot(a).matrix() += g.matrix();
    if (tp.requires_grad(b)) tp.grad_slot(b).matrix() -= g.matrix();
  });
}

Var mul(Tape& t, Var a, Var b) {
  require_same(t.value(a), t.value(b), "mul");
  Tensor y = t.value(a);
  y.matrix().array() *= t.value(b).matrix().array();
  Var parents[] = {a, b};
  return t.record(std::move(y), parents, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) {
      tp.grad_slot(a).matrix().array() += g.matrix().array() * tp.value(b).matrix().array();
    }
    if (tp.requires_grad(b)) {
      tp.grad_slot(b).matrix().array() += g.matrix().array() * tp.value(a).matrix().array();
    }
  });
}

Var scale(Tape& t, Var a, double s) {
  Tensor y = t.value(a);
  y.matrix() *= s;
  Var parents[] = {a};
  return t.record(std::move(y), parents, [a, s](Tape& tp, const Tensor& g) {
    tp.grad_slot(a).matrix() += s * g.matrix();
  });
}

Var add_row(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  if (bv.size() != av.cols()) {
    throw ShapeError("add_row: row " + to_string(bv.shape()) + " does not match columns of " +
                     to_string(av.shape()));
  }
  Tensor y = av;
  auto row = Eigen::Map<const Eigen::RowVectorXd>(bv.data(), Eigen::Index(bv.size()));
  y.matrix().rowwise() += row;
  Var parents[] = {a, b};
  return t.record(std::move(y), parents, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) tp.grad_slot(a).matrix() += g.matrix();
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_slot(b);
      Eigen::Map<Eigen::RowVectorXd>(gb.data(), Eigen::Index(gb.size())) +=
          g.matrix().colwise().sum();
    }
  });
}

Var scale_rows(Tape& t, Var a, Var s) {
  const Tensor& av = t.value(a);
  const Tensor& sv = t.value(s);
  if (sv.size() != av.rows()) {
    throw ShapeError("scale_rows: scales " + to_string(sv.shape()) + " vs rows of " +
                     to_string(av.shape()));
  }
  Tensor y = av;
  for (std::size_t r = 0; r < av.rows(); ++r) y.matrix().row(Eigen::Index(r)) *= sv[r];
  Var parents[] = {a, s};
  return t.record(std::move(y), parents, [a, s](Tape& tp, const Tensor& g) {
    const Tensor& avv = tp.value(a);
    const Tensor& svv = tp.value(s);
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_slot(a);
      for (std::size_t r = 0; r < avv.rows(); ++r) {
        ga.matrix().row(Eigen::Index(r)) += svv[r] * g.matrix().row(Eigen::Index(r));
      }
    }
    if (tp.requires_grad(s)) {
      Tensor& gs = tp.grad_slot(s);
      for (std::size_t r = 0; r < avv.rows(); ++r) {
        gs[r] += g.matrix().row(Eigen::Index(r)).dot(avv.matrix().row(Eigen::Index(r)));
      }
    }
  });
}

Var matmul_t(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  if (av.cols() != bv.cols()) {
    throw ShapeError("matmul: input " + to_string(av.shape()) + " incompatible with weight " +
                     to_string(bv.shape()));
  }
  Tensor y({av.rows(), bv.rows()});
  y.matrix().noalias() = av.matrix() * bv.matrix().transpose();
  Var parents[] = {a, b};
  return t.record(std::move(y), parents, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) tp.grad_slot(a).matrix().noalias() += g.matrix() * tp.value(b).matrix();
    if (tp.requires_grad(b)) {
      tp.grad_slot(b).matrix().noalias() += g.matrix().transpose() * tp.value(a).matrix();
    }
  });
}

Var linear(Tape& t, Var x, Var w, Var bias) {
  Var y = matmul_t(t, x, w);
  return bias.valid() ? add_row(t, y, bias) : y;
}

Var relu(Tape& t, Var a) {
  return unary(
      t, a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x) { return x > 0 ? 1.0 : 0.0; });
}

Var tanh(Tape& t, Var a) {
  return unary(
      t, a, [](double x) { return std::tanh(x); },
      [](double x) {
        const double y = std::tanh(x);
        return 1.0 - y * y;
      });
}

Var sigmoid(Tape& t, Var a) {
  return unary(t, a, sigmoid_scalar, [](double x) {
    const double s = sigmoid_scalar(x);
    return s * (1.0 - s);
  });
}

Var silu(Tape& t, Var a) {
  return unary(
      t, a, [](double x) { return x * sigmoid_scalar(x); },
      [](double x) {
        const double s = sigmoid_scalar(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Var square(Tape& t, Var a) {
  return unary(
      t, a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var abs(Tape& t, Var a) {
  return unary(
      t, a, [](double x) { return std::fabs(x); },
      [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var clamp(Tape& t, Var a, double lo, double hi) {
  return unary(
      t, a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = t.value(parts[0]).rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    if (t.value(p).rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + to_string(t.value(parts[0]).shape()) +
                       " vs " + to_string(t.value(p).shape()));
    }
    cols += t.value(p).cols();
  }
  Tensor y({rows, cols});
  std::size_t offset = 0;
  std::vector<std::size_t> offsets;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    y.matrix().middleCols(Eigen::Index(offset), Eigen::Index(v.cols())) = v.matrix();
    offsets.push_back(offset);
    offset += v.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return t.record(std::move(y), parts, [ps, offsets](Tape& tp, const Tensor& g) {
    for (std::size_t k = 0; k < ps.size(); ++k) {
      if (!tp.requires_grad(ps[k])) continue;
      Tensor& gp = tp.grad_slot(ps[k]);
      gp.matrix() += g.matrix().middleCols(Eigen::Index(offsets[k]), Eigen::Index(gp.cols()));
    }
  });
}

Var sum(Tape& t, Var a) {
  Tensor y({1}, t.value(a).matrix().sum());
  Var parents[] = {a};
  return t.record(std::move(y), parents, [a](Tape& tp, const Tensor& g) {
    tp.grad_slot(a).matrix().array() += g[0];
  });
}

Var mean(Tape& t, Var a) {
  const double n = static_cast<double>(t.value(a).size());
  if (n == 0) throw ShapeError("mean of empty tensor");
  return scale(t, sum(t, a), 1.0 / n);
}

Var row_sq_norm(Tape& t, Var a) {
  const Tensor& av = t.value(a);
  Tensor y({av.rows(), 1});
  for (std::size_t r = 0; r < av.rows(); ++r) y[r] = av.matrix().row(Eigen::Index(r)).squaredNorm();
  Var parents[] = {a};
  return t.record(std::move(y), parents, [a](Tape& tp, const Tensor& g) {
    const Tensor& avv = tp.value(a);
    Tensor& ga = tp.grad_slot(a);
    for (std::size_t r = 0; r < avv.rows(); ++r) {
      ga.matrix().row(Eigen::Index(r)) += 2.0 * g[r] * avv.matrix().row(Eigen::Index(r));
    }
  });
}

Var row_normalize(Tape& t, Var v, double s, double min_norm) {
  const Tensor& vv = t.value(v);
  Tensor y = vv;
  std::vector<double> norms(vv.rows());
  for (std::size_t r = 0; r < vv.rows(); ++r) {
    norms[r] = vv.matrix().row(Eigen::Index(r)).norm();
    if (!(norms[r] >= min_norm)) {
      throw std::domain_error("row " + std::to_string(r) + " has norm " +
                              std::to_string(norms[r]) + " below " + std::to_string(min_norm));
    }
    y.matrix().row(Eigen::Index(r)) *= s / norms[r];
  }
  Var parents[] = {v};
  return t.record(std::move(y), parents, [v, s, norms](Tape& tp, const Tensor& g) {
    // d(s v/|v|) = s/|v| (I - n n^T) dv
    const Tensor& vv2 = tp.value(v);
    Tensor& gv = tp.grad_slot(v);
    for (std::size_t r = 0; r < vv2.rows(); ++r) {
      const auto row = vv2.matrix().row(Eigen::Index(r));
      const auto gr = g.matrix().row(Eigen::Index(r));
      const double inv = 1.0 / norms[r];
      const double proj = gr.dot(row) * inv * inv;
      gv.matrix().row(Eigen::Index(r)) += s * inv * (gr - proj * row);
    }
  });
}

Var gather_rows(Tape& t, Var table, std::vector<std::size_t> index) {
  const Tensor& tv = t.value(table);
  Tensor y({index.size(), tv.cols()});
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= tv.rows()) throw ShapeError("gather_rows: index out of range");
    y.matrix().row(Eigen::Index(r)) = tv.matrix().row(Eigen::Index(index[r]));
  }
  Var parents[] = {table};
  return t.record(std::move(y), parents, [table, index](Tape& tp, const Tensor& g) {
    Tensor& gt = tp.grad_slot(table);
    for (std::size_t r = 0; r < index.size(); ++r) {
      gt.matrix().row(Eigen::Index(index[r])) += g.matrix().row(Eigen::Index(r));
    }
  });
}

Var binary_cross_entropy(Tape& t, Var prediction, Var target, double eps) {
  const Tensor& p = t.value(prediction);
  const Tensor& y = t.value(target);
  require_same(p, y, "binary_cross_entropy");
  Tensor out = Tensor::zeros_like(p);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], eps, 1.0 - eps);
    out[i] = -(y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q));
  }
  Var parents[] = {prediction};
  return t.record(std::move(out), parents, [prediction, target, eps](Tape& tp, const Tensor& g) {
    const Tensor& pv = tp.value(prediction);
    const Tensor& yv = tp.value(target);
    Tensor& gp = tp.grad_slot(prediction);
    for (std::size_t i = 0; i < pv.size(); ++i) {
      if (pv[i] <= eps || pv[i] >= 1.0 - eps) continue;
      gp[i] += g[i] * (pv[i] - yv[i]) / (pv[i] * (1.0 - pv[i]));
    }
  });
}

Var spline_edges(Tape& t, Var x, Var coef, Var spline_scale, Var base_weight,
                 const BSplineGrid& grid, bool anchored) {
  const Tensor& xv = t.value(x);
  const Tensor& cv = t.value(coef);
  const Tensor& sv = t.value(spline_scale);
  const Tensor& bv = t.value(base_weight);
  const std::size_t batch = xv.rows();
  const std::size_t in = xv.cols();
  const std::size_t nb = grid.basis_count();
  if (cv.rank() != 3 || cv.shape()[1] != in || cv.shape()[2] != nb) {
    throw ShapeError("spline_edges: coefficients " + to_string(cv.shape()) +
                     " incompatible with input " + to_string(xv.shape()) + " and " +
                     std::to_string(nb) + " bases");
  }
  const std::size_t out = cv.shape()[0];
  if (sv.shape() != Shape{out, in} || bv.shape() != Shape{out, in}) {
    throw ShapeError("spline_edges: edge weights must be " + to_string(Shape{out, in}));
  }

  std::vector<double> anchor(nb, 0.0);
  if (anchored) grid.evaluate(0.0, anchor);

  // Shifted bases and their derivatives for every (row, input).
  auto basis = std::make_shared<std::vector<double>>(batch * in * nb);
  auto dbasis = std::make_shared<std::vector<double>>(batch * in * nb);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < in; ++i) {
      std::span<double> bs(basis->data() + (b * in + i) * nb, nb);
      std::span<double> ds(dbasis->data() + (b * in + i) * nb, nb);
      grid.evaluate(xv.at(b, i), bs, ds);
      for (std::size_t c = 0; c < nb; ++c) bs[c] -= anchor[c];
    }
  }
  // spline values S[b, o, i]
  auto spl = std::make_shared<std::vector<double>>(batch * out * in);
  Tensor y({batch, out});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) {
        const double* bs = basis->data() + (b * in + i) * nb;
        const double* cs = cv.data() + (o * in + i) * nb;
        double s = 0.0;
        for (std::size_t c = 0; c < nb; ++c) s += cs[c] * bs[c];
        (*spl)[(b * out + o) * in + i] = s;
        const double xi = xv.at(b, i);
        const double gate = xi / (1.0 + std::exp(-xi));
        acc += bv.at(o, i) * gate + sv.at(o, i) * s;
      }
      y.at(b, o) = acc;
    }
  }

  Var parents[] = {x, coef, spline_scale, base_weight};
  return t.record(
      std::move(y), parents,
      [x, coef, spline_scale, base_weight, basis, dbasis, spl, batch, in, out, nb](
          Tape& tp, const Tensor& g) {
        const Tensor& xv2 = tp.value(x);
        const Tensor& cv2 = tp.value(coef);
        const Tensor& sv2 = tp.value(spline_scale);
        const Tensor& bv2 = tp.value(base_weight);
        const bool gx = tp.requires_grad(x);
        const bool gc = tp.requires_grad(coef);
        const bool gs = tp.requires_grad(spline_scale);
        const bool gb = tp.requires_grad(base_weight);
        Tensor* gxs = gx ? &tp.grad_slot(x) : nullptr;
        Tensor* gcs = gc ? &tp.grad_slot(coef) : nullptr;
        Tensor* gss = gs ? &tp.grad_slot(spline_scale) : nullptr;
        Tensor* gbs = gb ? &tp.grad_slot(base_weight) : nullptr;
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t i = 0; i < in; ++i) {
            const double xi = xv2.at(b, i);
            const double sig = 1.0 / (1.0 + std::exp(-xi));
            const double gate = xi * sig;
            const double dgate = sig * (1.0 + xi * (1.0 - sig));
            const double* bs = basis->data() + (b * in + i) * nb;
            const double* ds = dbasis->data() + (b * in + i) * nb;
            double dx = 0.0;
            for (std::size_t o = 0; o < out; ++o) {
              const double go = g.at(b, o);
              if (go == 0.0) continue;
              const double* cs = cv2.data() + (o * in + i) * nb;
              if (gb) gbs->at(o, i) += go * gate;
              if (gs) gss->at(o, i) += go * (*spl)[(b * out + o) * in + i];
              if (gc) {
                double* gcc = gcs->data() + (o * in + i) * nb;
                const double w = go * sv2.at(o, i);
                for (std::size_t c = 0; c < nb; ++c) gcc[c] += w * bs[c];
              }
              if (gx) {
                double ds_sum = 0.0;
                for (std::size_t c = 0; c < nb; ++c) ds_sum += cs[c] * ds[c];
                dx += go * (bv2.at(o, i) * dgate + sv2.at(o, i) * ds_sum);
              }
            }
            if (gx) gxs->at(b, i) += dx;
          }
        }
      });
}

}  // namespace sdfedit::nn
