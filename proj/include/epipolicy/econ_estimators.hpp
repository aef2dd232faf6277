#pragma once

// Effects on an economic outcome that loads on active cases:
// standard DID, regression DID and the adjusted regression DID that nets out
// the policy's effect on infections.

#include "epipolicy/case_estimators.hpp"
#include "epipolicy/cohort.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace epipolicy {

// Untreated regression of Y_t - Y_base on (1, I_t - I_base). Influence
// vectors run over all cohort units (zero for treated ones).
struct EconPeriodFit {
    int t = 0;
    double tau_tilde = 0.0;
    double alpha = 0.0;
    std::vector<double> infl_tau;
    std::vector<double> infl_alpha;
    double resid_sd = 0.0;
    std::size_t n_untreated = 0;
};

struct EconFit {
    bool pooled = false;
    std::vector<EconPeriodFit> periods;

    const EconPeriodFit& at(int t) const;
};

EconPeriodFit fit_tau_alpha(const Panel& panel, const Cohort& cohort, int t);
// Per-period fits, or with `pooled` a single alpha from a stacked regression
// of all listed periods with one intercept per period.
EconFit fit_econ(const Panel& panel, const Cohort& cohort, std::span<const int> periods, bool pooled = false);

// Treated mean of I_t - I_base minus the DR estimate of the policy's effect on
// active cases.
Estimate counterfactual_infections(const Panel& panel, const Cohort& cohort, const DrDesign& design, int t);

Estimate att_y_adjusted(const Panel& panel, const Cohort& cohort, const EconPeriodFit& fit,
                        const Estimate& counterfactual_i);
Estimate att_y_standard_did(const Panel& panel, const Cohort& cohort, int t);
Estimate att_y_regression_did(const Panel& panel, const Cohort& cohort, const EconPeriodFit& fit);

struct EconDiagnostic {
    int t = 0;
    double alpha = 0.0;
    double tau_tilde = 0.0;
    double att_i = 0.0;
};

// t,alpha_t,tau_tilde_t,att_i_hat_t
void write_econ_diagnostics_csv(std::ostream& out, std::span<const EconDiagnostic> rows);

}  // namespace epipolicy
