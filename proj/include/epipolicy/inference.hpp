#pragma once

// Multiplier bootstrap over per-location influence functions: pointwise
// standard errors, sup-t uniform bands and tests of a zero effect.

#include "epipolicy/rng.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace epipolicy {

// n locations x m periods, row-major so a location's contributions are
// contiguous.
class InfluenceMatrix {
public:
    InfluenceMatrix() = default;
    InfluenceMatrix(std::size_t n, std::size_t m) : n_(n), m_(m), data_(n * m, 0.0) {}

    std::size_t rows() const noexcept { return n_; }
    std::size_t cols() const noexcept { return m_; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * m_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * m_ + j]; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * m_, m_}; }

    void set_column(std::size_t j, std::span<const double> v);
    std::vector<double> column(std::size_t j) const;
    // Append one column.
    void push_column(std::span<const double> v);

private:
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<double> data_;
};

struct BootstrapOptions {
    int draws = 999;
    double level = 0.95;
};

struct BootstrapResult {
    std::vector<double> se;
    std::vector<bool> degenerate;        // zero spread: band collapses to the estimate
    double crit_pointwise = 0.0;
    double crit_uniform = 0.0;
    std::vector<double> sup_draws;       // max_j |perturbed_j| / se_j per draw
    int warnings = 0;
};

BootstrapResult multiplier_bootstrap(const InfluenceMatrix& infl, const BootstrapOptions& options, Rng& rng);

double normal_cdf(double z);
double normal_quantile(double p);

struct AttPoint {
    int index = 0;                       // calendar period or event time
    double estimate = 0.0;
    double se = 0.0;
    double band_lo = 0.0;                // uniform band
    double band_hi = 0.0;
    double pw_lo = 0.0;                  // pointwise interval
    double pw_hi = 0.0;
    std::size_t n_treated = 0;
    std::size_t n_untreated = 0;
    std::size_t n_dropped = 0;
};

struct AttSeries {
    std::string index_name = "t";
    std::vector<AttPoint> points;
    InfluenceMatrix influence;           // columns aligned with points
    double level = 0.95;
    double crit_pointwise = 0.0;
    double crit_uniform = 0.0;
    std::vector<double> sup_draws;
    bool has_inference = false;
};

// Bootstraps the series' influence matrix and fills SEs and bands.
void attach_inference(AttSeries& series, const BootstrapOptions& options, Rng& rng);

struct ZeroTest {
    std::vector<double> p_pointwise;
    double sup_t = 0.0;
    double p_joint = 1.0;
};

// Two-sided z tests per point and a sup-t joint test against the bootstrap
// distribution of the sup statistic.
ZeroTest test_zero(const AttSeries& series);

// index,estimate,se,band_lo,band_hi,n_treated,n_untreated,n_dropped
void write_estimates_csv(std::ostream& out, const AttSeries& series);

}  // namespace epipolicy
