#include "hgm/numkit.hpp"

#include <algorithm>
#include <cmath>

namespace hgm::num {

Matrix softmax_rows(const Matrix& m) {
    if (m.empty()) throw DimensionError("softmax_rows: empty matrix");
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double mx = m(r, 0);
        for (std::size_t c = 1; c < m.cols(); ++c) mx = std::max(mx, m(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double e = std::exp(m(r, c) - mx);
            out(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) /= sum;
    }
    if (!out.all_finite()) throw NumericError("softmax_rows: non-finite output");
    return out;
}

double cosine_sim(std::span<const double> a, std::span<const double> b, bool* degenerate) {
    if (degenerate) *degenerate = false;
    if (a.empty() || b.empty()) throw DimensionError("cosine_sim: empty vector");
    if (a.size() != b.size()) throw DimensionError("cosine_sim: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double kl_div(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw DimensionError("kl_div: length mismatch");
    double ps = 0.0, qs = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) throw ValidationError("kl_div: negative entry");
        ps += p[i];
        qs += q[i];
    }
    if (std::abs(ps - 1.0) > 1e-9 || std::abs(qs - 1.0) > 1e-9)
        throw ValidationError("kl_div: inputs must each sum to 1 within 1e-9");
    double r = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        r += p[i] * std::log(p[i] / std::max(q[i], kKlFloor));
    }
    if (std::abs(r) < 1e-12) r = 0.0;
    return r;
}

}  // namespace hgm::num
