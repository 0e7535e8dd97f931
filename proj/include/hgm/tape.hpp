#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "hgm/matrix.hpp"

namespace hgm::num {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid for the tape that
// created it.
struct Var {
    std::uint32_t index = 0;
};

// Reverse-mode gradient tape. Every primitive records just enough state to
// compute exact analytic partials of a scalar output with respect to any
// `leaf`. backward() replays the recorded operations in exact reverse order
// and accumulates gradients additively, so a leaf used twice receives the
// sum of both paths.
//
// Values produced by every operation are checked for finiteness; a NaN or
// Inf raises NumericError naming the operation, which is how training
// divergence is detected.
class Tape {
public:
    // Differentiable input (parameter). Gradient is tracked.
    Var leaf(Matrix value);
    // Non-differentiable input. Gradient-free; backward never touches it.
    Var constant(Matrix value);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);   // elementwise
    Var div(Var a, Var b);   // elementwise
    Var neg(Var a);
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var scale(Var a, double c);
    Var add_scalar(Var a, double c);
    Var add_constmat(Var a, Matrix m);  // a + m, m not differentiated (mask trick)
    Var mul_constmat(Var a, Matrix m);  // a .* m, m not differentiated
    Var sum(Var a);        // 1x1
    Var mean_all(Var a);   // 1x1
    Var mean_rows(Var a);  // 1 x cols, column means over rows
    Var exp(Var a);
    Var log(Var a);
    Var log_floored(Var a, double eps);  // ln(max(a, eps)); zero slope below the floor
    Var sqrt(Var a);
    Var sigmoid(Var a);
    Var softplus(Var a);
    Var leaky_relu(Var a, double slope);
    Var elu(Var a);  // x >= 0 ? x : e^x - 1
    Var softmax_rows(Var a);
    Var concat_cols(std::span<const Var> parts);
    Var concat_rows(std::span<const Var> parts);
    Var gather_rows(Var a, std::vector<std::size_t> rows);
    // Arbitrary (row, col) entries as a 1 x k row; duplicates accumulate on
    // the way back.
    Var gather_entries(Var a, std::vector<std::pair<std::size_t, std::size_t>> entries);
    Var mul_scalar(Var a, Var s);  // s is 1x1, broadcast multiply
    Var div_scalar(Var a, Var s);  // s is 1x1, broadcast divide
    // Identity forward, but backward stops here: the input is treated as a
    // constant during optimization.
    Var stop_gradient(Var a);

    const Matrix& value(Var v) const { return nodes_[v.index].value; }
    const Matrix& grad(Var v) const { return nodes_[v.index].grad; }
    std::size_t size() const { return nodes_.size(); }

    // Seeds d(output)/d(output) = 1 and replays the tape in reverse.
    // `output` must be 1x1. May be called once per tape.
    void backward(Var output);

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool needs_grad = false;
        std::function<void(Tape&, const Matrix&)> back;  // receives this node's grad
        const char* op = "";
    };

    Var push(Matrix value, bool needs_grad, const char* op,
             std::function<void(Tape&, const Matrix&)> back);
    void accumulate(Var target, const Matrix& g);
    const Matrix& val(std::uint32_t i) const { return nodes_[i].value; }

    std::vector<Node> nodes_;
    bool ran_backward_ = false;
};

// ---- composite helpers (built from primitives) ----

// Dot product of two 1xN rows -> 1x1.
Var dot(Tape& t, Var a, Var b);
// Euclidean norm of a 1xN row -> 1x1.
Var norm2(Tape& t, Var a);
// Cosine similarity of two 1xN rows -> 1x1. Norms must be nonzero.
Var cosine(Tape& t, Var a, Var b);
// Stable log(sum(exp(row))) for a 1xN row -> 1x1 (max handled as a constant
// shift, which leaves the gradient exact).
Var logsumexp_row(Tape& t, Var a);
// KL(p || q) for a 1xN tape row p (strictly positive) against a constant
// target q, floored at `eps` before the log.
Var kl_const_target(Tape& t, Var p, const Matrix& q, double eps);

}  // namespace hgm::num
