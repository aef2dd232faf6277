#include "epipolicy/linalg.hpp"

#include "epipolicy/error.hpp"
#include "epipolicy/simd.hpp"

#include <algorithm>
#include <cmath>

namespace epipolicy {

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
    Matrix out(idx.size(), cols_);
    for (std::size_t c = 0; c < cols_; ++c) {
        const auto src = col(c);
        auto dst = out.col(c);
        for (std::size_t r = 0; r < idx.size(); ++r) dst[r] = src[idx[r]];
    }
    return out;
}

Matrix Matrix::scale_rows(std::span<const double> w) const {
    Matrix out(*this);
    for (std::size_t c = 0; c < cols_; ++c) {
        auto dst = out.col(c);
        for (std::size_t r = 0; r < rows_; ++r) dst[r] *= w[r];
    }
    return out;
}

std::vector<double> Matrix::multiply(std::span<const double> beta) const {
    std::vector<double> out(rows_, 0.0);
    for (std::size_t c = 0; c < cols_; ++c) simd::axpy(beta[c], col(c), out);
    return out;
}

std::vector<double> Matrix::multiply_transpose(std::span<const double> v) const {
    std::vector<double> out(cols_);
    for (std::size_t c = 0; c < cols_; ++c) out[c] = simd::dot(col(c), v);
    return out;
}

Matrix Matrix::gram() const {
    Matrix g(cols_, cols_);
    for (std::size_t a = 0; a < cols_; ++a)
        for (std::size_t b = a; b < cols_; ++b) {
            const double v = simd::dot(col(a), col(b));
            g(a, b) = v;
            g(b, a) = v;
        }
    return g;
}

namespace {

// Lower Cholesky factor; returns false when a pivot is not positive.
bool cholesky(const Matrix& a, Matrix& l) {
    const std::size_t n = a.rows();
    l = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return true;
}

std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    std::vector<double> y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) y[i] -= l(i, k) * y[k];
        y[i] /= l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= l(k, ii) * y[k];
        y[ii] /= l(ii, ii);
    }
    return y;
}

Matrix cholesky_inverse(const Matrix& l) {
    const std::size_t n = l.rows();
    Matrix inv(n, n);
    std::vector<double> e(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::fill(e.begin(), e.end(), 0.0);
        e[c] = 1.0;
        const auto x = cholesky_solve(l, e);
        for (std::size_t r = 0; r < n; ++r) inv(r, c) = x[r];
    }
    return inv;
}

constexpr double kRankTolerance = 1e-9;
constexpr double kRidgeScale = 1e-8;

}  // namespace

Matrix spd_inverse(const Matrix& a) {
    Matrix l;
    if (!cholesky(a, l)) throw CollinearityError("matrix is not positive definite");
    return cholesky_inverse(l);
}

LeastSquares::LeastSquares(const Matrix& x) : qr_(x), tau_(x.cols(), 0.0) {
    const std::size_t n = qr_.rows();
    const std::size_t k = qr_.cols();
    if (n == 0 || k == 0) throw DegenerateDesignError("least squares needs a nonempty design");

    for (std::size_t j = 0; j < k && j < n; ++j) {
        auto cj = qr_.col(j).subspan(j);
        const double norm = std::sqrt(simd::dot(cj, cj));
        if (norm == 0.0) {
            tau_[j] = 0.0;
            continue;
        }
        const double x0 = cj[0];
        const double beta = x0 >= 0.0 ? -norm : norm;
        tau_[j] = (beta - x0) / beta;
        const double inv = 1.0 / (x0 - beta);
        for (std::size_t i = 1; i < cj.size(); ++i) cj[i] *= inv;
        cj[0] = 1.0;
        for (std::size_t c = j + 1; c < k; ++c) {
            auto cc = qr_.col(c).subspan(j);
            const double w = simd::dot(cj, cc);
            simd::axpy(-tau_[j] * w, cj, cc);
        }
        cj[0] = beta;
    }

    double max_diag = 0.0;
    for (std::size_t j = 0; j < std::min(n, k); ++j) max_diag = std::max(max_diag, std::abs(qr_(j, j)));
    rank_ = 0;
    for (std::size_t j = 0; j < std::min(n, k); ++j)
        if (std::abs(qr_(j, j)) > kRankTolerance * max_diag) ++rank_;

    if (rank_ < k) {
        ridge_ = true;
        Matrix g = x.gram();
        double trace = 0.0;
        for (std::size_t j = 0; j < k; ++j) trace += g(j, j);
        penalty_ = kRidgeScale * (trace > 0.0 ? trace / static_cast<double>(k) : 1.0);
        for (std::size_t j = 0; j < k; ++j) g(j, j) += penalty_;
        if (!cholesky(g, ridge_factor_))
            throw CollinearityError("ridge-regularized normal equations are not positive definite");
        gram_inverse_ = cholesky_inverse(ridge_factor_);
        qr_ = x;  // the ridge path needs X'y, so keep the design itself
        tau_.clear();
        return;
    }

    // (R'R)^{-1} = R^{-1} R^{-T}
    Matrix rinv(k, k);
    for (std::size_t c = 0; c < k; ++c) {
        rinv(c, c) = 1.0 / qr_(c, c);
        for (std::size_t r = c; r-- > 0;) {
            double s = 0.0;
            for (std::size_t m = r + 1; m <= c; ++m) s += qr_(r, m) * rinv(m, c);
            rinv(r, c) = -s / qr_(r, r);
        }
    }
    gram_inverse_ = Matrix(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a; b < k; ++b) {
            double s = 0.0;
            for (std::size_t m = std::max(a, b); m < k; ++m) s += rinv(a, m) * rinv(b, m);
            gram_inverse_(a, b) = s;
            gram_inverse_(b, a) = s;
        }
}

std::vector<double> LeastSquares::solve(std::span<const double> y) const {
    const std::size_t n = qr_.rows();
    const std::size_t k = qr_.cols();
    if (y.size() != n) throw ParameterError("least squares: response length does not match design rows");

    if (ridge_) return cholesky_solve(ridge_factor_, qr_.multiply_transpose(y));

    std::vector<double> qty(y.begin(), y.end());
    for (std::size_t j = 0; j < k; ++j) {
        if (tau_[j] == 0.0) continue;
        std::span<const double> v = qr_.col(j).subspan(j);
        std::span<double> tail(qty.data() + j, n - j);
        // v[0] is implicitly 1; the stored diagonal holds R(j, j).
        double w = tail[0];
        if (v.size() > 1) w += simd::dot(v.subspan(1), std::span<const double>(tail).subspan(1));
        tail[0] -= tau_[j] * w;
        if (v.size() > 1) simd::axpy(-tau_[j] * w, v.subspan(1), tail.subspan(1));
    }
    std::vector<double> beta(k, 0.0);
    for (std::size_t r = k; r-- > 0;) {
        double s = qty[r];
        for (std::size_t c = r + 1; c < k; ++c) s -= qr_(r, c) * beta[c];
        beta[r] = s / qr_(r, r);
    }
    return beta;
}

}  // namespace epipolicy
