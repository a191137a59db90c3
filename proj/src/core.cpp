#include "gcdassoc/core.hpp"

#include <cmath>
#include <string>

namespace gcd {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw InputError("matrix data size " + std::to_string(data_.size()) + " != " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += a[k] * b[k];
    }
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void normalize_in_place(std::span<double> v) {
    const double n = norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw InputError("cannot normalize a zero or non-finite vector");
    }
    for (double& x : v) {
        x /= n;
    }
}

FeatureMatrix::FeatureMatrix(Matrix m) : m_(std::move(m)) {
    for (std::size_t r = 0; r < m_.rows(); ++r) {
        for (double x : m_.row(r)) {
            if (!std::isfinite(x)) {
                throw InputError("feature row " + std::to_string(r) + " has a non-finite entry");
            }
        }
        const double n = norm(m_.row(r));
        if (std::abs(n - 1.0) > kUnitTolerance) {
            throw InputError("feature row " + std::to_string(r) + " has norm " +
                             std::to_string(n) + ", expected unit length");
        }
    }
}

FeatureMatrix FeatureMatrix::normalized(Matrix m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (double x : m.row(r)) {
            if (!std::isfinite(x)) {
                throw InputError("feature row " + std::to_string(r) + " has a non-finite entry");
            }
        }
        if (norm(m.row(r)) == 0.0) {
            throw InputError("feature row " + std::to_string(r) + " has zero norm");
        }
        normalize_in_place(m.row(r));
    }
    return FeatureMatrix(std::move(m));
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), dim());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    FeatureMatrix fm;
    fm.m_ = std::move(out);
    return fm;
}

} // namespace gcd
