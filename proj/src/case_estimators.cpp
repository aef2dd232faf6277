#include "epipolicy/case_estimators.hpp"

#include "epipolicy/error.hpp"
#include "epipolicy/simd.hpp"
#include "epipolicy/sird.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace epipolicy {

namespace {

constexpr double kClipLow = 1e-6;
constexpr double kClipHigh = 1.0 - 1e-6;

double mean_of(std::span<const double> v) {
    return v.empty() ? 0.0 : simd::sum(v) / static_cast<double>(v.size());
}

// Column means of diag(w) X.
std::vector<double> weighted_col_means(const Matrix& x, std::span<const double> w) {
    std::vector<double> m(x.cols());
    const double n = static_cast<double>(x.rows());
    for (std::size_t c = 0; c < x.cols(); ++c) m[c] = simd::dot(x.col(c), w) / n;
    return m;
}

std::vector<double> mat_vec(const Matrix& a, std::span<const double> v) { return a.multiply(v); }

}  // namespace

const char* variant_name(DrVariant v) noexcept {
    switch (v) {
        case DrVariant::DoublyRobust: return "dr";
        case DrVariant::Ipw: return "ipw";
        case DrVariant::RegressionAdjustment: return "ra";
    }
    return "?";
}

std::vector<double> hajek_weights(std::span<const std::uint8_t> treated, std::span<const double> pscore) {
    if (treated.size() != pscore.size()) throw ParameterError("hajek_weights: length mismatch");
    const std::size_t n = treated.size();
    const double eps = std::numeric_limits<double>::epsilon();
    double sum_d = 0.0;
    double sum_g = 0.0;
    std::vector<double> g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (treated[i]) {
            sum_d += 1.0;
            continue;
        }
        const double p = pscore[i];
        if (!(p >= 0.0) || p >= 1.0 - eps)
            throw OverlapError("untreated unit " + std::to_string(i) + " has propensity score " + std::to_string(p) +
                               "; trim the sample to the region of common support");
        g[i] = p / (1.0 - p);
        sum_g += g[i];
    }
    if (sum_d == 0.0) throw DegenerateDesignError("hajek_weights: no treated units");
    if (sum_g <= 0.0) throw DegenerateDesignError("hajek_weights: untreated odds sum to zero");
    const double nn = static_cast<double>(n);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = treated[i] ? nn / sum_d : -nn * g[i] / sum_g;
    return w;
}

DrDesign::DrDesign(const PreTreatmentState& state, std::span<const std::uint8_t> treated, const CaseModelSpec& spec)
    : spec_(spec), treated_(treated.begin(), treated.end()) {
    const std::size_t n = treated_.size();
    if (state.size() != n) throw ParameterError("DrDesign: state and treatment flags differ in length");
    uses_ps_ = spec.variant != DrVariant::RegressionAdjustment;
    uses_or_ = spec.variant != DrVariant::Ipw;

    std::size_t n1 = 0;
    for (auto d : treated_) n1 += d ? 1 : 0;
    if (n1 == 0) throw DegenerateDesignError("no treated units in the estimation sample");
    if (n1 == n) throw DegenerateDesignError("no untreated units in the estimation sample");
    const double nn = static_cast<double>(n);

    w1_.resize(n);
    for (std::size_t i = 0; i < n; ++i) w1_[i] = treated_[i] ? 1.0 : 0.0;
    mean_w1_ = mean_of(w1_);

    p_.assign(n, 0.0);
    w0_.assign(n, 0.0);
    if (uses_ps_) {
        ps_ = fit_propensity(state, treated_, spec.propensity, spec.irls);
        x_ps_ = ps_.features.design(state);
        p_ = ps_.fit.fitted;
        for (double& p : p_) {
            const double c = std::clamp(p, kClipLow, kClipHigh);
            if (c != p) clipped_ = true;
            p = c;
        }
        for (std::size_t i = 0; i < n; ++i) w0_[i] = treated_[i] ? 0.0 : p_[i] / (1.0 - p_[i]);
        mean_w0_ = mean_of(w0_);
        omega_ = hajek_weights(treated_, p_);
    }

    for (std::size_t i = 0; i < n; ++i)
        if (!treated_[i]) untreated_idx_.push_back(i);
    if (uses_or_) {
        or_features_ = FeatureMap::fit(state, spec.outcome);
        x_or_ = or_features_.design(state);
        ols_ = std::make_unique<LeastSquares>(x_or_.select_rows(untreated_idx_));
        ols_bread_ = ols_->gram_inverse();
        const std::size_t k = ols_bread_.rows();
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) ols_bread_(a, b) *= nn;
    }
}

std::vector<double> DrDesign::outcome_coefficients(std::span<const double> y) const {
    if (!uses_or_) return {};
    std::vector<double> yu(untreated_idx_.size());
    for (std::size_t k = 0; k < yu.size(); ++k) yu[k] = y[untreated_idx_[k]];
    return ols_->solve(yu);
}

Estimate DrDesign::estimate(std::span<const double> y) const {
    const std::size_t n = size();
    if (y.size() != n) throw ParameterError("DrDesign::estimate: outcome length mismatch");

    std::vector<double> r(y.begin(), y.end());
    std::vector<double> ols_a1;
    std::vector<double> ols_a3;
    if (uses_or_) {
        const auto eta = x_or_.multiply(outcome_coefficients(y));
        for (std::size_t i = 0; i < n; ++i) r[i] -= eta[i];
        ols_a1 = x_or_.multiply(mat_vec(ols_bread_, weighted_col_means(x_or_, w1_)));
        if (uses_ps_) ols_a3 = x_or_.multiply(mat_vec(ols_bread_, weighted_col_means(x_or_, w0_)));
    }

    const double eta1 = simd::dot(w1_, r) / static_cast<double>(n) / mean_w1_;
    Estimate est;
    est.influence.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double v = w1_[i] * (r[i] - eta1);
        if (uses_or_ && !treated_[i]) v -= r[i] * ols_a1[i];
        est.influence[i] = v / mean_w1_;
    }
    if (!uses_ps_) {
        est.value = eta1;
        return est;
    }

    const double eta0 = simd::dot(w0_, r) / static_cast<double>(n) / mean_w0_;
    est.value = eta1 - eta0;
    std::vector<double> m2w(n);
    for (std::size_t i = 0; i < n; ++i) m2w[i] = w0_[i] * (r[i] - eta0);
    const auto ps_dir = x_ps_.multiply(mat_vec(ps_.fit.scaled_hessian_inverse, weighted_col_means(x_ps_, m2w)));
    for (std::size_t i = 0; i < n; ++i) {
        double v = m2w[i] + (w1_[i] - p_[i]) * ps_dir[i];
        if (uses_or_ && !treated_[i]) v -= r[i] * ols_a3[i];
        est.influence[i] -= v / mean_w0_;
    }
    return est;
}

OutcomeModel fit_outcome_model(const DrDesign& design, const Panel& panel, const Cohort& cohort, Var v,
                               std::span<const int> periods) {
    OutcomeModel m;
    m.features = design.outcome_features();
    for (int t : periods) {
        m.periods.push_back(t);
        m.coef.push_back(design.outcome_coefficients(long_difference(panel, cohort, v, t)));
    }
    return m;
}

Estimate att_dr(const Panel& panel, const Cohort& cohort, const DrDesign& design, Var v, int t) {
    if (design.size() != cohort.size()) throw ParameterError("att_dr: design does not match cohort");
    return design.estimate(long_difference(panel, cohort, v, t));
}

Estimate difference_in_means(std::span<const double> y, std::span<const std::uint8_t> treated) {
    const std::size_t n = y.size();
    if (treated.size() != n) throw ParameterError("difference_in_means: length mismatch");
    double s1 = 0.0, s0 = 0.0, n1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (treated[i]) {
            s1 += y[i];
            n1 += 1.0;
        } else {
            s0 += y[i];
        }
    }
    const double n0 = static_cast<double>(n) - n1;
    if (n1 == 0.0 || n0 == 0.0) throw DegenerateDesignError("DID needs treated and untreated units");
    const double m1 = s1 / n1;
    const double m0 = s0 / n0;
    const double nn = static_cast<double>(n);
    Estimate est;
    est.value = m1 - m0;
    est.influence.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        est.influence[i] = treated[i] ? nn / n1 * (y[i] - m1) : -nn / n0 * (y[i] - m0);
    return est;
}

Estimate att_did(const Panel& panel, const Cohort& cohort, Var v, int t) {
    return difference_in_means(long_difference(panel, cohort, v, t), cohort.treated);
}

OracleResult did_impact_bias_oracle(const ScenarioConfig& config, int reps) {
    config.validate();
    if (reps < 2) throw ParameterError("oracle needs at least 2 replications");
    if (!config.adoption_dates.empty()) throw ParameterError("oracle supports the single-date design only");
    const std::int64_t pre = config.policy_time - 1;
    std::vector<double> diffs;
    diffs.reserve(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        const std::uint64_t root = derive_seed(config.root_seed, StreamTag::Auxiliary, static_cast<std::uint64_t>(r));
        Rng assign = make_stream(root, StreamTag::Assignment);
        const auto treated = assign_treatment(config, assign);
        double s1 = 0.0, s0 = 0.0, n1 = 0.0, n0 = 0.0;
        for (std::int64_t l = 0; l < config.n_locations; ++l) {
            const bool d = treated[static_cast<std::size_t>(l)] != 0;
            Rng timing = make_stream(root, StreamTag::FirstCase, static_cast<std::uint64_t>(l));
            PathOptions opt;
            opt.t_total = pre + 1;
            opt.first_case_time = draw_first_case_time(d, config, timing);
            opt.initial_cases = config.initial_cases;
            Rng path_rng = make_stream(root, StreamTag::Path, static_cast<std::uint64_t>(l));
            const auto path = simulate_path(config.sird, opt, path_rng);
            const double mu = expected_new_cases(path.states.back(), config.sird);
            if (d) {
                s1 += mu;
                n1 += 1.0;
            } else {
                s0 += mu;
                n0 += 1.0;
            }
        }
        if (n1 == 0.0 || n0 == 0.0) continue;
        diffs.push_back(s1 / n1 - s0 / n0);
    }
    OracleResult out;
    out.reps = static_cast<int>(diffs.size());
    if (diffs.empty()) throw DegenerateDesignError("oracle: every replication lacked a treated or untreated unit");
    const double m = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
    double ss = 0.0;
    for (double d : diffs) ss += (d - m) * (d - m);
    out.value = m;
    out.se = diffs.size() > 1 ? std::sqrt(ss / static_cast<double>(diffs.size() - 1) / static_cast<double>(diffs.size()))
                              : 0.0;
    return out;
}

TrimResult trim_overlap(std::span<const double> pscore, std::span<const std::uint8_t> treated, double cap,
                        bool symmetric, std::span<const std::string> ids) {
    if (!(cap > 0.5 && cap < 1.0)) throw ParameterError("trim cap must lie in (0.5, 1)");
    if (pscore.size() != treated.size()) throw ParameterError("trim_overlap: length mismatch");
    TrimResult out;
    std::size_t treated_kept = 0;
    for (std::size_t i = 0; i < pscore.size(); ++i) {
        const double p = pscore[i];
        const bool drop = p > cap || (symmetric && p < 1.0 - cap);
        if (drop) {
            out.dropped.push_back(i);
            if (i < ids.size()) out.dropped_ids.push_back(ids[i]);
        } else {
            out.kept.push_back(i);
            if (treated[i]) ++treated_kept;
        }
    }
    if (treated_kept == 0) throw InfeasibleError("trimming removed every treated location");
    out.local_estimand = !out.dropped.empty();
    return out;
}

TrimmedCohort trim_cohort(const Panel& panel, const Cohort& cohort, const CaseModelSpec& spec, double cap,
                          bool symmetric) {
    const auto state = pre_treatment_state(panel, cohort, spec.propensity.covariates);
    const auto ps = fit_propensity(state, cohort.treated, spec.propensity, spec.irls);
    std::vector<std::string> ids;
    ids.reserve(cohort.size());
    for (auto u : cohort.units) ids.push_back(panel.id(u));
    TrimmedCohort out;
    out.trim = trim_overlap(ps.fit.fitted, cohort.treated, cap, symmetric, ids);
    out.cohort.base_period = cohort.base_period;
    for (auto k : out.trim.kept) {
        out.cohort.units.push_back(cohort.units[k]);
        out.cohort.treated.push_back(cohort.treated[k]);
    }
    return out;
}

}  // namespace epipolicy
