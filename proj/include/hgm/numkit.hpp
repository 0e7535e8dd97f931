#pragma once

#include <span>

#include "hgm/matrix.hpp"

namespace hgm::num {

// Row-wise softmax with max-subtraction. Every output row is nonnegative and
// sums to 1 within 1e-12. Empty input is a dimension error.
Matrix softmax_rows(const Matrix& m);

// Cosine similarity of two equal-length vectors, clamped to [-1, 1].
// A zero-norm input yields 0 by convention; `degenerate`, when non-null, is
// set to true in that case so callers can distinguish it from orthogonality.
double cosine_sim(std::span<const double> a, std::span<const double> b,
                  bool* degenerate = nullptr);

// KL divergence D(p || q) for two distributions over the same support.
// Both must be nonnegative and sum to 1 within 1e-9; q is floored at 1e-9
// before division so exact zeros in the target are tolerated. Terms with
// p_i = 0 contribute nothing. Results within floating-point noise of zero
// (|r| < 1e-12) are snapped to exactly 0.
double kl_div(std::span<const double> p, std::span<const double> q);

inline constexpr double kKlFloor = 1e-9;

}  // namespace hgm::num
