#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hgm/tape.hpp"

namespace hgm::num {

// Builds the scalar objective on a fresh tape from leaf parameters.
using BuildFn = std::function<Var(Tape&, std::span<const Var>)>;

// Compares analytic gradients against central differences over every entry
// of every parameter. Returns the max of |analytic - fd| / max(1, |analytic|).
double grad_check(const BuildFn& build, const std::vector<Matrix>& params, double eps = 1e-5);

}  // namespace hgm::num
