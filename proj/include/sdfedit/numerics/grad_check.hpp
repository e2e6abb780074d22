#pragma once

#include "sdfedit/numerics/tape.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace sdfedit::nn {

struct GradCheckOptions {
  double step = 1e-5;
  double floor = 1e-8;
  /// Entries checked per parameter; 0 checks all. Larger tensors are
  /// subsampled with `seed`.
  std::size_t max_entries = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
  /// Same ratio taken per parameter tensor with max-norms:
  ///   max|a - n| / max(max|a|, max|n|, floor).
  double max_tensor_relative_error = 0.0;
  std::string worst_tensor;
};

/// Builds a graph on a fresh tape, returning its scalar output.
using ScalarGraph = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients of `graph` against central differences
/// for every entry of `params`:
///   |analytic - numeric| / max(|analytic|, |numeric|, floor).
/// Throws ShapeError if the graph output is not scalar.
GradCheckResult grad_check(const ScalarGraph& graph, std::span<Parameter* const> params,
                           const GradCheckOptions& options = {});

}  // namespace sdfedit::nn
