#pragma once

#include "sdfedit/numerics/bspline.hpp"
#include "sdfedit/numerics/tape.hpp"

#include <cstddef>
#include <span>
#include <vector>

// Differentiable primitives. Matrices are (rows = batch, cols = features).
namespace sdfedit::nn {

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
/// a (r x c) + b broadcast over rows, b of c entries.
Var add_row(Tape& t, Var a, Var b);
/// Multiplies row r of a (r x c) by s[r], s of shape (r x 1) or (r).
Var scale_rows(Tape& t, Var a, Var s);

/// a (r x k) * b^T, b of shape (c x k).
Var matmul_t(Tape& t, Var a, Var b);
/// x W^T + bias; pass an invalid Var for no bias.
Var linear(Tape& t, Var x, Var w, Var bias);

Var relu(Tape& t, Var a);
Var tanh(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var silu(Tape& t, Var a);
Var square(Tape& t, Var a);
Var abs(Tape& t, Var a);
Var clamp(Tape& t, Var a, double lo, double hi);

Var concat_cols(Tape& t, std::span<const Var> parts);
Var sum(Tape& t, Var a);
Var mean(Tape& t, Var a);
/// Per-row squared L2 norm, shape (r x 1).
Var row_sq_norm(Tape& t, Var a);
/// Per-row scale * v / ||v||. Rows with norm below `min_norm` throw
/// std::domain_error.
Var row_normalize(Tape& t, Var v, double scale, double min_norm = 1e-12);
/// Rows of `table` picked by `index`.
Var gather_rows(Tape& t, Var table, std::vector<std::size_t> index);

/// Elementwise -[y log p + (1-y) log(1-p)] with p clamped to [eps, 1-eps];
/// `target` receives no gradient.
Var binary_cross_entropy(Tape& t, Var prediction, Var target, double eps = 1e-7);

/// Learnable spline edges between every input i and output o:
///   y[b,o] = sum_i base[o,i] * silu(x[b,i]) + scale[o,i] * S_oi(x[b,i])
///   S_oi(x) = sum_c coef[o,i,c] * (B_c(x) - anchor * B_c(0))
/// With `anchored` set, a zero input row maps to a zero output row exactly.
Var spline_edges(Tape& t, Var x, Var coef, Var spline_scale, Var base_weight,
                 const BSplineGrid& grid, bool anchored);

}  // namespace sdfedit::nn
