#pragma once

// Policy effects on cumulative cases for one adoption cohort: the long
// difference DID contrast and the doubly robust unconfoundedness estimator
// (with pure reweighting and pure regression-adjustment variants).

#include "epipolicy/cohort.hpp"
#include "epipolicy/features.hpp"
#include "epipolicy/propensity.hpp"
#include "epipolicy/scenario.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace epipolicy {

// omega_l = D_l / mean(D) - g_l (1 - D_l) / mean(g (1 - D)), g = p / (1 - p).
// Throws OverlapError if an untreated unit has p numerically at 1.
std::vector<double> hajek_weights(std::span<const std::uint8_t> treated, std::span<const double> pscore);

enum class DrVariant { DoublyRobust, Ipw, RegressionAdjustment };

const char* variant_name(DrVariant v) noexcept;

struct CaseModelSpec {
    FeatureSpec propensity{};
    FeatureSpec outcome{};
    DrVariant variant = DrVariant::DoublyRobust;
    IrlsOptions irls{};
};

// Regression of an outcome on the feature expansion over untreated units.
struct OutcomeModel {
    FeatureMap features;
    std::vector<int> periods;
    std::vector<std::vector<double>> coef;   // one vector per period
};

// Everything about a cohort that does not depend on the outcome: propensity
// fit, clipped scores, weights and the pieces of the influence function that
// account for estimating the propensity score and the outcome regression.
// One design serves every outcome period and every outcome variable.
class DrDesign {
public:
    DrDesign(const PreTreatmentState& state, std::span<const std::uint8_t> treated, const CaseModelSpec& spec);

    // ATT for an outcome vector aligned with the cohort units (typically a
    // long difference from the conditioning period).
    Estimate estimate(std::span<const double> y) const;
    // Coefficients of the untreated outcome regression for y.
    std::vector<double> outcome_coefficients(std::span<const double> y) const;

    std::size_t size() const noexcept { return treated_.size(); }
    DrVariant variant() const noexcept { return spec_.variant; }
    const PropensityModel& propensity() const noexcept { return ps_; }
    const FeatureMap& outcome_features() const noexcept { return or_features_; }
    const std::vector<double>& pscore() const noexcept { return p_; }
    const std::vector<double>& weights() const noexcept { return omega_; }
    // Scores had to be moved into [1e-6, 1 - 1e-6].
    bool clipped() const noexcept { return clipped_; }
    bool separation() const noexcept { return ps_.fit.separation; }

private:
    CaseModelSpec spec_;
    std::vector<std::uint8_t> treated_;
    PropensityModel ps_;
    FeatureMap or_features_;
    Matrix x_ps_;
    Matrix x_or_;
    std::vector<std::size_t> untreated_idx_;
    std::unique_ptr<LeastSquares> ols_;
    Matrix ols_bread_;                   // (X_u'X_u / n)^{-1}
    std::vector<double> p_;
    std::vector<double> w1_;
    std::vector<double> w0_;
    std::vector<double> omega_;
    double mean_w1_ = 0.0;
    double mean_w0_ = 0.0;
    bool clipped_ = false;
    bool uses_ps_ = true;
    bool uses_or_ = true;
};

OutcomeModel fit_outcome_model(const DrDesign& design, const Panel& panel, const Cohort& cohort, Var v,
                               std::span<const int> periods);

// DR estimate of the effect on X_t using the long difference X_t - X_base.
Estimate att_dr(const Panel& panel, const Cohort& cohort, const DrDesign& design, Var v, int t);
inline Estimate att_dr_cases(const Panel& panel, const Cohort& cohort, const DrDesign& design, int t) {
    return att_dr(panel, cohort, design, Var::C, t);
}

// Treated minus untreated mean of X_t - X_base, with influence function.
Estimate att_did(const Panel& panel, const Cohort& cohort, Var v, int t);
inline Estimate att_did_cases(const Panel& panel, const Cohort& cohort, int t) {
    return att_did(panel, cohort, Var::C, t);
}
// Same contrast on an arbitrary outcome vector.
Estimate difference_in_means(std::span<const double> y, std::span<const std::uint8_t> treated);

struct OracleResult {
    double value = 0.0;
    double se = 0.0;
    int reps = 0;
};

// Monte Carlo mean over independent panels of
// mean_{D=1} beta I S / N - mean_{D=0} beta I S / N at the period before
// adoption: the expected DID contrast in new cases on impact when the policy
// does nothing.
OracleResult did_impact_bias_oracle(const ScenarioConfig& config, int reps);

struct TrimResult {
    std::vector<std::size_t> kept;            // positions into the input sample
    std::vector<std::size_t> dropped;
    std::vector<std::string> dropped_ids;
    bool local_estimand = false;              // anything was dropped
};

// Drops every unit with p > cap (treated ones have no comparable untreated
// units there), and with `symmetric` also units with p < 1 - cap. Throws InfeasibleError if no treated unit survives.
TrimResult trim_overlap(std::span<const double> pscore, std::span<const std::uint8_t> treated, double cap,
                        bool symmetric = false, std::span<const std::string> ids = {});

// Refits on the units of the cohort that survive trimming.
struct TrimmedCohort {
    Cohort cohort;
    TrimResult trim;
};
TrimmedCohort trim_cohort(const Panel& panel, const Cohort& cohort, const CaseModelSpec& spec, double cap,
                          bool symmetric = false);

}  // namespace epipolicy
