#pragma once

#include "sdfedit/numerics/tape.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sdfedit::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update of every parameter from its `grad`.
/// Throws std::domain_error naming the first parameter with a non-finite
/// gradient (no parameter is modified in that case).
void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& config);

}  // namespace sdfedit::nn
