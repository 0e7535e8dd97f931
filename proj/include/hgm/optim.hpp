#pragma once

#include <vector>

#include "hgm/matrix.hpp"

namespace hgm::num {

// Plain gradient descent: p <- p - lr * g, elementwise. lr must be positive.
void sgd_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, double lr);

}  // namespace hgm::num
