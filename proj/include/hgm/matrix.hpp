#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hgm/errors.hpp"
#include "hgm/rng.hpp"

namespace hgm::num {

// Dense 2-D array of doubles, row-major. The universal numeric carrier:
// parameters, activations, attention matrices and single scalars (1x1) all
// live here. Double precision throughout; the gradient-check thresholds
// assume it.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw DimensionError("matrix data length does not match rows*cols");
    }

    static Matrix row(std::vector<double> values) {
        const std::size_t n = values.size();
        return Matrix(1, n, std::move(values));
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix uniform(std::size_t rows, std::size_t cols, Rng& rng, double lo, double hi) {
        Matrix m(rows, cols);
        for (double& v : m.data_) v = rng.uniform(lo, hi);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> row_span(std::size_t r) const {
        return std::span<const double>(data_.data() + r * cols_, cols_);
    }
    std::span<double> row_span(std::size_t r) {
        return std::span<double>(data_.data() + r * cols_, cols_);
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
                             "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                             "x" + std::to_string(b.cols()) + ")");
}

inline Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

inline Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
    return out;
}

inline Matrix scale(const Matrix& a, double c) {
    Matrix out = a;
    for (double& v : out.data()) v *= c;
    return out;
}

inline Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
    return out;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.rows()) + ")");
    Matrix out(a.rows(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double av = a(r, k);
            for (std::size_t c = 0; c < b.cols(); ++c) out(r, c) += av * b(k, c);
        }
    }
    return out;
}

}  // namespace hgm::num
