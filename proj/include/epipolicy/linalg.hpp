#pragma once

// Small dense linear algebra for the regressions in the estimators: design
// matrices have a few hundred to a few thousand rows and at most a few dozen
// columns. Storage is column-major so that column operations map onto the
// contiguous SIMD kernels.

#include <cstddef>
#include <span>
#include <vector>

namespace epipolicy {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[c * rows_ + r]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[c * rows_ + r]; }

    std::span<double> col(std::size_t c) noexcept { return {data_.data() + c * rows_, rows_}; }
    std::span<const double> col(std::size_t c) const noexcept { return {data_.data() + c * rows_, rows_}; }

    std::span<const double> data() const noexcept { return data_; }

    // Rows selected by index, in the given order.
    Matrix select_rows(std::span<const std::size_t> idx) const;
    // Each row multiplied by w[r].
    Matrix scale_rows(std::span<const double> w) const;

    std::vector<double> multiply(std::span<const double> beta) const;           // X * beta
    std::vector<double> multiply_transpose(std::span<const double> v) const;    // X' * v
    Matrix gram() const;                                                          // X' X

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Symmetric positive definite inverse via Cholesky. Throws CollinearityError
// when the matrix is not numerically positive definite.
Matrix spd_inverse(const Matrix& a);

// Least squares fit of y on X through a Householder QR of X. When X is
// numerically rank deficient the fit falls back to a ridge solve of the
// normal equations with penalty 1e-8 * trace(X'X) / k.
class LeastSquares {
public:
    explicit LeastSquares(const Matrix& x);

    std::vector<double> solve(std::span<const double> y) const;
    // (X'X)^{-1}, or (X'X + penalty I)^{-1} on the ridge path.
    const Matrix& gram_inverse() const noexcept { return gram_inverse_; }

    bool ridge_used() const noexcept { return ridge_; }
    double ridge_penalty() const noexcept { return penalty_; }
    std::size_t rank() const noexcept { return rank_; }
    std::size_t rows() const noexcept { return qr_.rows(); }
    std::size_t cols() const noexcept { return qr_.cols(); }

private:
    Matrix qr_;                 // R in the upper triangle, Householder vectors below
    std::vector<double> tau_;   // reflector scales
    Matrix gram_inverse_;
    Matrix ridge_factor_;       // Cholesky factor of X'X + penalty I on the ridge path
    std::size_t rank_ = 0;
    bool ridge_ = false;
    double penalty_ = 0.0;
};

}  // namespace epipolicy
