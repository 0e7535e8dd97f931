#include "hgm/optim.hpp"

#include "hgm/errors.hpp"

namespace hgm::num {

void sgd_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, double lr) {
    if (lr <= 0.0) throw ValidationError("sgd_step: lr must be positive");
    if (params.size() != grads.size())
        throw DimensionError("sgd_step: parameter/gradient count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        require_same_shape(params[i], grads[i], "sgd_step");
        for (std::size_t j = 0; j < params[i].size(); ++j)
            params[i].data()[j] -= lr * grads[i].data()[j];
    }
}

}  // namespace hgm::num
