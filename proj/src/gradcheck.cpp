#include "hgm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace hgm::num {

namespace {

double evaluate(const BuildFn& build, const std::vector<Matrix>& params) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const Matrix& p : params) leaves.push_back(tape.leaf(p));
    Var out = build(tape, leaves);
    const Matrix& v = tape.value(out);
    if (v.rows() != 1 || v.cols() != 1)
        throw DimensionError("grad_check: objective must be a 1x1 scalar");
    return v(0, 0);
}

}  // namespace

double grad_check(const BuildFn& build, const std::vector<Matrix>& params, double eps) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const Matrix& p : params) leaves.push_back(tape.leaf(p));
    Var out = build(tape, leaves);
    tape.backward(out);

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        const Matrix& analytic = tape.grad(leaves[pi]);
        for (std::size_t i = 0; i < params[pi].size(); ++i) {
            std::vector<Matrix> bumped = params;
            bumped[pi].data()[i] += eps;
            const double hi = evaluate(build, bumped);
            bumped[pi].data()[i] -= 2.0 * eps;
            const double lo = evaluate(build, bumped);
            const double fd = (hi - lo) / (2.0 * eps);
            const double a = analytic.data()[i];
            const double err = std::abs(a - fd) / std::max(1.0, std::abs(a));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace hgm::num
