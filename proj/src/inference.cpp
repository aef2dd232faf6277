#include "epipolicy/inference.hpp"

#include "epipolicy/csv.hpp"
#include "epipolicy/error.hpp"
#include "epipolicy/simd.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace epipolicy {

namespace {

constexpr double kIqrToSd = 1.349;

double quantile_sorted(std::span<const double> v, double q) {
    // Linear interpolation between order statistics.
    if (v.empty()) return 0.0;
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

void InfluenceMatrix::set_column(std::size_t j, std::span<const double> v) {
    if (v.size() != n_ || j >= m_) throw ParameterError("influence column does not fit the matrix");
    for (std::size_t i = 0; i < n_; ++i) data_[i * m_ + j] = v[i];
}

std::vector<double> InfluenceMatrix::column(std::size_t j) const {
    std::vector<double> c(n_);
    for (std::size_t i = 0; i < n_; ++i) c[i] = data_[i * m_ + j];
    return c;
}

void InfluenceMatrix::push_column(std::span<const double> v) {
    if (m_ == 0 && n_ == 0) n_ = v.size();
    if (v.size() != n_) throw ParameterError("influence column has the wrong length");
    std::vector<double> next(n_ * (m_ + 1));
    for (std::size_t i = 0; i < n_; ++i) {
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(i * m_), m_,
                    next.begin() + static_cast<std::ptrdiff_t>(i * (m_ + 1)));
        next[i * (m_ + 1) + m_] = v[i];
    }
    data_ = std::move(next);
    ++m_;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("normal quantile needs p in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

BootstrapResult multiplier_bootstrap(const InfluenceMatrix& infl, const BootstrapOptions& options, Rng& rng) {
    const std::size_t n = infl.rows();
    const std::size_t m = infl.cols();
    if (options.draws < 100) throw ParameterError("bootstrap needs at least 100 draws");
    if (n < 10) throw ParameterError("bootstrap needs at least 10 locations");
    if (!(options.level > 0.0 && options.level < 1.0)) throw ParameterError("confidence level must lie in (0, 1)");
    const auto B = static_cast<std::size_t>(options.draws);

    // draws x m, filled one draw at a time from Rademacher multipliers.
    std::vector<double> pert(B * m, 0.0);
    std::vector<double> acc(m);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t b = 0; b < B; ++b) {
        std::fill(acc.begin(), acc.end(), 0.0);
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i % 64 == 0) bits = rng();
            const double xi = (bits & 1u) ? 1.0 : -1.0;
            bits >>= 1;
            simd::axpy(xi, infl.row(i), acc);
        }
        for (std::size_t j = 0; j < m; ++j) pert[b * m + j] = acc[j] * inv_n;
    }

    BootstrapResult res;
    res.se.assign(m, 0.0);
    res.degenerate.assign(m, false);
    std::vector<double> colv(B);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t b = 0; b < B; ++b) colv[b] = pert[b * m + j];
        std::sort(colv.begin(), colv.end());
        const double iqr = quantile_sorted(colv, 0.75) - quantile_sorted(colv, 0.25);
        res.se[j] = iqr / kIqrToSd;
        if (!(res.se[j] > 0.0)) {
            res.se[j] = 0.0;
            res.degenerate[j] = true;
            ++res.warnings;
        }
    }

    res.crit_pointwise = normal_quantile(0.5 + options.level / 2.0);
    res.sup_draws.assign(B, 0.0);
    bool any = false;
    for (std::size_t b = 0; b < B; ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (res.degenerate[j]) continue;
            any = true;
            s = std::max(s, std::abs(pert[b * m + j]) / res.se[j]);
        }
        res.sup_draws[b] = s;
    }
    if (any) {
        std::vector<double> sorted = res.sup_draws;
        std::sort(sorted.begin(), sorted.end());
        res.crit_uniform = std::max(quantile_sorted(sorted, options.level), res.crit_pointwise);
    } else {
        res.crit_uniform = res.crit_pointwise;
    }
    return res;
}

void attach_inference(AttSeries& series, const BootstrapOptions& options, Rng& rng) {
    if (series.influence.cols() != series.points.size())
        throw ParameterError("influence matrix does not match the series");
    const auto res = multiplier_bootstrap(series.influence, options, rng);
    series.level = options.level;
    series.crit_pointwise = res.crit_pointwise;
    series.crit_uniform = res.crit_uniform;
    series.sup_draws = res.sup_draws;
    for (std::size_t j = 0; j < series.points.size(); ++j) {
        auto& p = series.points[j];
        p.se = res.se[j];
        p.band_lo = p.estimate - res.crit_uniform * p.se;
        p.band_hi = p.estimate + res.crit_uniform * p.se;
        p.pw_lo = p.estimate - res.crit_pointwise * p.se;
        p.pw_hi = p.estimate + res.crit_pointwise * p.se;
    }
    series.has_inference = true;
}

ZeroTest test_zero(const AttSeries& series) {
    ZeroTest out;
    out.p_pointwise.reserve(series.points.size());
    for (const auto& p : series.points) {
        double pv = 1.0;
        if (p.se > 0.0) {
            const double z = std::abs(p.estimate) / p.se;
            pv = 2.0 * (1.0 - normal_cdf(z));
            out.sup_t = std::max(out.sup_t, z);
        } else if (p.estimate != 0.0) {
            pv = 0.0;
        }
        out.p_pointwise.push_back(pv);
    }
    if (!series.sup_draws.empty()) {
        std::size_t exceed = 0;
        for (double s : series.sup_draws) exceed += s >= out.sup_t ? 1 : 0;
        out.p_joint = static_cast<double>(exceed + 1) / static_cast<double>(series.sup_draws.size() + 1);
    } else if (!out.p_pointwise.empty()) {
        const double pmin = *std::min_element(out.p_pointwise.begin(), out.p_pointwise.end());
        out.p_joint = std::min(1.0, pmin * static_cast<double>(out.p_pointwise.size()));
    }
    return out;
}

void write_estimates_csv(std::ostream& out, const AttSeries& series) {
    out << series.index_name << ",estimate,se,band_lo,band_hi,n_treated,n_untreated,n_dropped\n";
    for (const auto& p : series.points)
        out << p.index << ',' << csv::format_number(p.estimate) << ',' << csv::format_number(p.se) << ','
            << csv::format_number(p.band_lo) << ',' << csv::format_number(p.band_hi) << ',' << p.n_treated << ','
            << p.n_untreated << ',' << p.n_dropped << '\n';
}

}  // namespace epipolicy
