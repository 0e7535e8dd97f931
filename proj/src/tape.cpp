#include "hgm/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hgm::num {

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double stable_softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

}  // namespace

Var Tape::push(Matrix value, bool needs_grad, const char* op,
               std::function<void(Tape&, const Matrix&)> back) {
    if (!value.all_finite())
        throw NumericError(std::string("tape op '") + op + "' produced a non-finite value");
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.back = std::move(back);
    n.op = op;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::accumulate(Var target, const Matrix& g) {
    Node& n = nodes_[target.index];
    if (!n.needs_grad) return;
    if (n.grad.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
    for (std::size_t i = 0; i < g.size(); ++i) n.grad.data()[i] += g.data()[i];
}

void Tape::backward(Var output) {
    if (ran_backward_) throw ValidationError("tape: backward already ran");
    ran_backward_ = true;
    const Matrix& out = nodes_[output.index].value;
    if (out.rows() != 1 || out.cols() != 1)
        throw DimensionError("tape: backward output must be a 1x1 scalar");
    for (Node& n : nodes_)
        if (n.needs_grad) n.grad = Matrix(n.value.rows(), n.value.cols());
    nodes_[output.index].grad = Matrix(1, 1, std::vector<double>{1.0});
    for (std::uint32_t i = output.index + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.back && n.needs_grad && !n.grad.empty()) n.back(*this, n.grad);
    }
}

Var Tape::leaf(Matrix value) { return push(std::move(value), true, "leaf", nullptr); }

Var Tape::constant(Matrix value) { return push(std::move(value), false, "constant", nullptr); }

Var Tape::add(Var a, Var b) {
    require_same_shape(val(a.index), val(b.index), "tape add");
    const bool ng = nodes_[a.index].needs_grad || nodes_[b.index].needs_grad;
    return push(num::add(val(a.index), val(b.index)), ng, "add",
                [a, b](Tape& t, const Matrix& g) {
                    t.accumulate(a, g);
                    t.accumulate(b, g);
                });
}

Var Tape::sub(Var a, Var b) {
    require_same_shape(val(a.index), val(b.index), "tape sub");
    const bool ng = nodes_[a.index].needs_grad || nodes_[b.index].needs_grad;
    return push(num::sub(val(a.index), val(b.index)), ng, "sub",
                [a, b](Tape& t, const Matrix& g) {
                    t.accumulate(a, g);
                    t.accumulate(b, num::scale(g, -1.0));
                });
}

Var Tape::mul(Var a, Var b) {
    require_same_shape(val(a.index), val(b.index), "tape mul");
    const bool ng = nodes_[a.index].needs_grad || nodes_[b.index].needs_grad;
    return push(hadamard(val(a.index), val(b.index)), ng, "mul",
                [a, b](Tape& t, const Matrix& g) {
                    t.accumulate(a, hadamard(g, t.val(b.index)));
                    t.accumulate(b, hadamard(g, t.val(a.index)));
                });
}

Var Tape::div(Var a, Var b) {
    require_same_shape(val(a.index), val(b.index), "tape div");
    const Matrix& av = val(a.index);
    const Matrix& bv = val(b.index);
    Matrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = av.data()[i] / bv.data()[i];
    const bool ng = nodes_[a.index].needs_grad || nodes_[b.index].needs_grad;
    return push(std::move(out), ng, "div", [a, b](Tape& t, const Matrix& g) {
        const Matrix& bv2 = t.val(b.index);
        const Matrix& av2 = t.val(a.index);
        Matrix da(g.rows(), g.cols()), db(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) {
            da.data()[i] = g.data()[i] / bv2.data()[i];
            db.data()[i] = -g.data()[i] * av2.data()[i] / (bv2.data()[i] * bv2.data()[i]);
        }
        t.accumulate(a, da);
        t.accumulate(b, db);
    });
}

Var Tape::neg(Var a) {
    return push(num::scale(val(a.index), -1.0), nodes_[a.index].needs_grad, "neg",
                [a](Tape& t, const Matrix& g) { t.accumulate(a, num::scale(g, -1.0)); });
}

Var Tape::matmul(Var a, Var b) {
    const bool ng = nodes_[a.index].needs_grad || nodes_[b.index].needs_grad;
    return push(num::matmul(val(a.index), val(b.index)), ng, "matmul",
                [a, b](Tape& t, const Matrix& g) {
                    t.accumulate(a, num::matmul(g, num::transpose(t.val(b.index))));
                    t.accumulate(b, num::matmul(num::transpose(t.val(a.index)), g));
                });
}

Var Tape::transpose(Var a) {
    return push(num::transpose(val(a.index)), nodes_[a.index].needs_grad, "transpose",
                [a](Tape& t, const Matrix& g) { t.accumulate(a, num::transpose(g)); });
}

Var Tape::scale(Var a, double c) {
    return push(num::scale(val(a.index), c), nodes_[a.index].needs_grad, "scale",
                [a, c](Tape& t, const Matrix& g) { t.accumulate(a, num::scale(g, c)); });
}

Var Tape::add_scalar(Var a, double c) {
    Matrix out = val(a.index);
    for (double& v : out.data()) v += c;
    return push(std::move(out), nodes_[a.index].needs_grad, "add_scalar",
                [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Var Tape::add_constmat(Var a, Matrix m) {
    require_same_shape(val(a.index), m, "tape add_constmat");
    return push(num::add(val(a.index), m), nodes_[a.index].needs_grad, "add_constmat",
                [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Var Tape::mul_constmat(Var a, Matrix m) {
    require_same_shape(val(a.index), m, "tape mul_constmat");
    Matrix kept = m;
    return push(hadamard(val(a.index), m), nodes_[a.index].needs_grad, "mul_constmat",
                [a, kept](Tape& t, const Matrix& g) { t.accumulate(a, hadamard(g, kept)); });
}

Var Tape::sum(Var a) {
    double s = 0.0;
    for (double v : val(a.index).data()) s += v;
    const Matrix& av = val(a.index);
    const std::size_t r = av.rows(), c = av.cols();
    return push(Matrix(1, 1, std::vector<double>{s}), nodes_[a.index].needs_grad, "sum",
                [a, r, c](Tape& t, const Matrix& g) {
                    t.accumulate(a, Matrix(r, c, g(0, 0)));
                });
}

Var Tape::mean_all(Var a) {
    const Matrix& av = val(a.index);
    if (av.empty()) throw DimensionError("tape mean_all: empty input");
    double s = 0.0;
    for (double v : av.data()) s += v;
    const std::size_t r = av.rows(), c = av.cols();
    const double inv = 1.0 / static_cast<double>(av.size());
    return push(Matrix(1, 1, std::vector<double>{s * inv}), nodes_[a.index].needs_grad,
                "mean_all", [a, r, c, inv](Tape& t, const Matrix& g) {
                    t.accumulate(a, Matrix(r, c, g(0, 0) * inv));
                });
}

Var Tape::mean_rows(Var a) {
    const Matrix& av = val(a.index);
    if (av.rows() == 0) throw DimensionError("tape mean_rows: empty input");
    Matrix out(1, av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t c = 0; c < av.cols(); ++c) out(0, c) += av(r, c);
    const double inv = 1.0 / static_cast<double>(av.rows());
    for (double& v : out.data()) v *= inv;
    const std::size_t rows = av.rows();
    return push(std::move(out), nodes_[a.index].needs_grad, "mean_rows",
                [a, rows, inv](Tape& t, const Matrix& g) {
                    Matrix da(rows, g.cols());
                    for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < g.cols(); ++c) da(r, c) = g(0, c) * inv;
                    t.accumulate(a, da);
                });
}

Var Tape::exp(Var a) {
    Matrix out = val(a.index);
    for (double& v : out.data()) v = std::exp(v);
    return push(std::move(out), nodes_[a.index].needs_grad, "exp",
                [a, self = static_cast<std::uint32_t>(nodes_.size())](Tape& t, const Matrix& g) {
                    t.accumulate(a, hadamard(g, t.val(self)));
                });
}

Var Tape::log(Var a) {
    Matrix out = val(a.index);
    for (double& v : out.data()) v = std::log(v);
    return push(std::move(out), nodes_[a.index].needs_grad, "log",
                [a](Tape& t, const Matrix& g) {
                    const Matrix& av = t.val(a.index);
                    Matrix da(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i)
                        da.data()[i] = g.data()[i] / av.data()[i];
                    t.accumulate(a, da);
                });
}

Var Tape::log_floored(Var a, double eps) {
    Matrix out = val(a.index);
    for (double& v : out.data()) v = std::log(std::max(v, eps));
    return push(std::move(out), nodes_[a.index].needs_grad, "log_floored",
                [a, eps](Tape& t, const Matrix& g) {
                    const Matrix& av = t.val(a.index);
                    Matrix da(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i)
                        da.data()[i] = av.data()[i] >= eps ? g.data()[i] / av.data()[i] : 0.0;
                    t.accumulate(a, da);
                });
}

Var Tape::sqrt(Var a) {
    Matrix out = val(a.index);
    for (double& v : out.data()) v = std::sqrt(v);
    return push(std::move(out), nodes_[a.index].needs_grad, "sqrt",
                [a, self = static_cast<std::uint32_t>(nodes_.size())](Tape& t, const Matrix& g) {
                    const Matrix& yv = t.val(self);
                    Matrix da(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i)
                        da.data()[i] = 0.5 * g.data()[i] / yv.data()[i];
                    t.accumulate(a, da);
                });
}

Var Tape::sigmoid(Var a) {
    Matrix out = val(a.index);
    for (double& v : out.data()) v = stable_sigmoid(v);
    return push(std::move(out), nodes_[a.index].needs_grad, "sigmoid",
                [a, self = static_cast<std::uint32_t>(nodes_.size())](Tape& t, const Matrix& g) {
                    const Matrix& yv = t.val(self);
                    Matrix da(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        const double y = yv.data()[i];
                        da.data()[i] = g.data()[i] * y * (1.0 - y);
                    }
                    t.accumulate(a, da);
                });
}

Var Tape::softplus(Var a) {
    Matrix out = val(a.index);
    for (double& v : out.data()) v = stable_softplus(v);
    return push(std::move(out), nodes_[a.index].needs_grad, "softplus",
                [a](Tape& t, const Matrix& g) {
                    const Matrix& av = t.val(a.index);
                    Matrix da(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i)
                        da.data()[i] = g.data()[i] * stable_sigmoid(av.data()[i]);
                    t.accumulate(a, da);
                });
}

Var Tape::leaky_relu(Var a, double slope) {
    Matrix out = val(a.index);
    for (double& v : out.data()) v = v >= 0.0 ? v : slope * v;
    return push(std::move(out), nodes_[a.index].needs_grad, "leaky_relu",
                [a, slope](Tape& t, const Matrix& g) {
                    const Matrix& av = t.val(a.index);
                    Matrix da(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i)
                        da.data()[i] = g.data()[i] * (av.data()[i] >= 0.0 ? 1.0 : slope);
                    t.accumulate(a, da);
                });
}

Var Tape::elu(Var a) {
    Matrix out = val(a.index);
    for (double& v : out.data()) v = v >= 0.0 ? v : std::expm1(v);
    return push(std::move(out), nodes_[a.index].needs_grad, "elu",
                [a, self = static_cast<std::uint32_t>(nodes_.size())](Tape& t, const Matrix& g) {
                    const Matrix& av = t.val(a.index);
                    const Matrix& yv = t.val(self);
                    Matrix da(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i)
                        da.data()[i] =
                            g.data()[i] * (av.data()[i] >= 0.0 ? 1.0 : yv.data()[i] + 1.0);
                    t.accumulate(a, da);
                });
}

Var Tape::softmax_rows(Var a) {
    const Matrix& av = val(a.index);
    if (av.empty()) throw DimensionError("tape softmax_rows: empty matrix");
    Matrix out(av.rows(), av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        double mx = av(r, 0);
        for (std::size_t c = 1; c < av.cols(); ++c) mx = std::max(mx, av(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < av.cols(); ++c) {
            out(r, c) = std::exp(av(r, c) - mx);
            sum += out(r, c);
        }
        for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) /= sum;
    }
    return push(std::move(out), nodes_[a.index].needs_grad, "softmax_rows",
                [a, self = static_cast<std::uint32_t>(nodes_.size())](Tape& t, const Matrix& g) {
                    const Matrix& yv = t.val(self);
                    Matrix da(g.rows(), g.cols());
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                        double dotgy = 0.0;
                        for (std::size_t c = 0; c < g.cols(); ++c) dotgy += g(r, c) * yv(r, c);
                        for (std::size_t c = 0; c < g.cols(); ++c)
                            da(r, c) = yv(r, c) * (g(r, c) - dotgy);
                    }
                    t.accumulate(a, da);
                });
}

Var Tape::concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("tape concat_cols: no parts");
    const std::size_t rows = val(parts[0].index).rows();
    std::size_t cols = 0;
    bool ng = false;
    for (Var p : parts) {
        if (val(p.index).rows() != rows)
            throw DimensionError("tape concat_cols: row count mismatch");
        cols += val(p.index).cols();
        ng = ng || nodes_[p.index].needs_grad;
    }
    Matrix out(rows, cols);
    std::size_t off = 0;
    for (Var p : parts) {
        const Matrix& pv = val(p.index);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < pv.cols(); ++c) out(r, off + c) = pv(r, c);
        off += pv.cols();
    }
    std::vector<Var> kept(parts.begin(), parts.end());
    return push(std::move(out), ng, "concat_cols", [kept](Tape& t, const Matrix& g) {
        std::size_t off2 = 0;
        for (Var p : kept) {
            const Matrix& pv = t.val(p.index);
            Matrix dp(pv.rows(), pv.cols());
            for (std::size_t r = 0; r < pv.rows(); ++r)
                for (std::size_t c = 0; c < pv.cols(); ++c) dp(r, c) = g(r, off2 + c);
            t.accumulate(p, dp);
            off2 += pv.cols();
        }
    });
}

Var Tape::concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("tape concat_rows: no parts");
    const std::size_t cols = val(parts[0].index).cols();
    std::size_t rows = 0;
    bool ng = false;
    for (Var p : parts) {
        if (val(p.index).cols() != cols)
            throw DimensionError("tape concat_rows: column count mismatch");
        rows += val(p.index).rows();
        ng = ng || nodes_[p.index].needs_grad;
    }
    Matrix out(rows, cols);
    std::size_t off = 0;
    for (Var p : parts) {
        const Matrix& pv = val(p.index);
        for (std::size_t r = 0; r < pv.rows(); ++r)
            for (std::size_t c = 0; c < cols; ++c) out(off + r, c) = pv(r, c);
        off += pv.rows();
    }
    std::vector<Var> kept(parts.begin(), parts.end());
    return push(std::move(out), ng, "concat_rows", [kept](Tape& t, const Matrix& g) {
        std::size_t off2 = 0;
        for (Var p : kept) {
            const Matrix& pv = t.val(p.index);
            Matrix dp(pv.rows(), pv.cols());
            for (std::size_t r = 0; r < pv.rows(); ++r)
                for (std::size_t c = 0; c < pv.cols(); ++c) dp(r, c) = g(off2 + r, c);
            t.accumulate(p, dp);
            off2 += pv.rows();
        }
    });
}

Var Tape::gather_rows(Var a, std::vector<std::size_t> rows) {
    const Matrix& av = val(a.index);
    Matrix out(rows.size(), av.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= av.rows()) throw DimensionError("tape gather_rows: row out of range");
        for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = av(rows[r], c);
    }
    return push(std::move(out), nodes_[a.index].needs_grad, "gather_rows",
                [a, rows = std::move(rows)](Tape& t, const Matrix& g) {
                    const Matrix& av2 = t.val(a.index);
                    Matrix da(av2.rows(), av2.cols());
                    for (std::size_t r = 0; r < rows.size(); ++r)
                        for (std::size_t c = 0; c < g.cols(); ++c) da(rows[r], c) += g(r, c);
                    t.accumulate(a, da);
                });
}

Var Tape::gather_entries(Var a, std::vector<std::pair<std::size_t, std::size_t>> entries) {
    const Matrix& av = val(a.index);
    Matrix out(1, entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto [r, c] = entries[k];
        if (r >= av.rows() || c >= av.cols())
            throw DimensionError("tape gather_entries: index out of range");
        out(0, k) = av(r, c);
    }
    return push(std::move(out), nodes_[a.index].needs_grad, "gather_entries",
                [a, entries = std::move(entries)](Tape& t, const Matrix& g) {
                    const Matrix& av2 = t.val(a.index);
                    Matrix da(av2.rows(), av2.cols());
                    for (std::size_t k = 0; k < entries.size(); ++k)
                        da(entries[k].first, entries[k].second) += g(0, k);
                    t.accumulate(a, da);
                });
}

Var Tape::mul_scalar(Var a, Var s) {
    const Matrix& sv = val(s.index);
    if (sv.rows() != 1 || sv.cols() != 1) throw DimensionError("tape mul_scalar: s must be 1x1");
    const bool ng = nodes_[a.index].needs_grad || nodes_[s.index].needs_grad;
    return push(num::scale(val(a.index), sv(0, 0)), ng, "mul_scalar",
                [a, s](Tape& t, const Matrix& g) {
                    const double sval = t.val(s.index)(0, 0);
                    t.accumulate(a, num::scale(g, sval));
                    const Matrix& av = t.val(a.index);
                    double ds = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i)
                        ds += g.data()[i] * av.data()[i];
                    t.accumulate(s, Matrix(1, 1, std::vector<double>{ds}));
                });
}

Var Tape::div_scalar(Var a, Var s) {
    const Matrix& sv = val(s.index);
    if (sv.rows() != 1 || sv.cols() != 1) throw DimensionError("tape div_scalar: s must be 1x1");
    const bool ng = nodes_[a.index].needs_grad || nodes_[s.index].needs_grad;
    return push(num::scale(val(a.index), 1.0 / sv(0, 0)), ng, "div_scalar",
                [a, s](Tape& t, const Matrix& g) {
                    const double sval = t.val(s.index)(0, 0);
                    t.accumulate(a, num::scale(g, 1.0 / sval));
                    const Matrix& av = t.val(a.index);
                    double ds = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i)
                        ds += g.data()[i] * av.data()[i];
                    t.accumulate(s, Matrix(1, 1, std::vector<double>{-ds / (sval * sval)}));
                });
}

Var Tape::stop_gradient(Var a) {
    return push(val(a.index), false, "stop_gradient", nullptr);
}

// ---- composites ----

Var dot(Tape& t, Var a, Var b) { return t.sum(t.mul(a, b)); }

Var norm2(Tape& t, Var a) { return t.sqrt(t.sum(t.mul(a, a))); }

Var cosine(Tape& t, Var a, Var b) {
    Var d = dot(t, a, b);
    Var denom = t.mul(norm2(t, a), norm2(t, b));
    return t.div(d, denom);
}

Var logsumexp_row(Tape& t, Var a) {
    const Matrix& av = t.value(a);
    if (av.rows() != 1 || av.empty()) throw DimensionError("logsumexp_row: need a 1xN row");
    double mx = av(0, 0);
    for (std::size_t c = 1; c < av.cols(); ++c) mx = std::max(mx, av(0, c));
    Var shifted = t.add_scalar(a, -mx);
    return t.add_scalar(t.log(t.sum(t.exp(shifted))), mx);
}

Var kl_const_target(Tape& t, Var p, const Matrix& q, double eps) {
    const Matrix& pv = t.value(p);
    require_same_shape(pv, q, "kl_const_target");
    Matrix logq = q;
    for (double& v : logq.data()) v = std::log(std::max(v, eps));
    Var diff = t.sub(t.log_floored(p, eps), t.constant(std::move(logq)));
    return t.sum(t.mul(p, diff));
}

}  // namespace hgm::num
