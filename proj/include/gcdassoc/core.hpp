#ifndef GCDASSOC_CORE_HPP
#define GCDASSOC_CORE_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcd {

/// Raised for malformed or out-of-domain user input (bad files, bad flags).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a binary or CSV file does not match its declared format.
class FormatError : public InputError {
public:
    using InputError::InputError;
};

/// Raised when an internal invariant is found broken. Indicates a bug.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Sentinel for "no label" / "no group".
inline constexpr int kUnassigned = -1;

/**
 * Dense row-major matrix of doubles. No invariants beyond shape.
 */
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    static Matrix identity(std::size_t n);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Scales `v` to unit length. Throws InputError on a zero or non-finite norm.
void normalize_in_place(std::span<double> v);

/**
 * Matrix whose rows are unit-length embeddings.
 *
 * Construction checks that every entry is finite and every row norm is
 * within kUnitTolerance of 1.
 */
class FeatureMatrix {
public:
    static constexpr double kUnitTolerance = 1e-4;

    FeatureMatrix() = default;
    explicit FeatureMatrix(Matrix m);

    /// Builds from arbitrary nonzero rows, scaling each to unit length.
    static FeatureMatrix normalized(Matrix m);

    std::size_t rows() const { return m_.rows(); }
    std::size_t dim() const { return m_.cols(); }
    bool empty() const { return m_.rows() == 0; }
    std::span<const double> row(std::size_t r) const { return m_.row(r); }
    double operator()(std::size_t r, std::size_t c) const { return m_(r, c); }
    const Matrix& matrix() const { return m_; }

    /// Rows selected by index, in the given order.
    FeatureMatrix select(std::span<const std::size_t> indices) const;

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

private:
    Matrix m_;
};

} // namespace gcd

#endif
