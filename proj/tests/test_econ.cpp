#include <doctest.h>

#include "epipolicy/case_estimators.hpp"
#include "epipolicy/econ_estimators.hpp"
#include "epipolicy/error.hpp"
#include "epipolicy/scenario.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

using namespace epipolicy;

namespace {

ScenarioConfig econ_config(std::uint64_t seed) {
    ScenarioConfig c;
    c.n_locations = 300;
    c.t_total = 70;
    c.policy_time = 35;
    c.lambda_d = 12;
    c.lambda_u = 16;
    c.econ = EconParams{};
    c.root_seed = seed;
    return c;
}

}  // namespace

TEST_CASE("untreated regression of the outcome change on the case change") {
    const Panel panel = build_panel(econ_config(1));
    const auto cohort = single_date_cohort(panel, 35);
    const auto fit = fit_tau_alpha(panel, cohort, 50);
    // alpha is -0.1 in the generating process; noise sd 1 against a wide spread of case changes
    CHECK(std::abs(fit.alpha + 0.1) < 0.02);
    CHECK(fit.n_untreated == cohort.n_untreated());
    CHECK(fit.infl_alpha.size() == cohort.size());
    for (std::size_t u = 0; u < cohort.size(); ++u)
        if (cohort.treated[u]) CHECK(fit.infl_alpha[u] == 0.0);
    // tau_tilde is the change of tau_t between the base period and t
    const EconParams e;
    CHECK(std::abs(fit.tau_tilde - (e.tau(50, 70) - e.tau(34, 70))) < 0.5);
}

TEST_CASE("adjusted minus regression did equals alpha times the case effect") {
    for (std::uint64_t seed : {2u, 3u, 4u}) {
        const Panel panel = build_panel(econ_config(seed));
        const auto cohort = single_date_cohort(panel, 35);
        const auto state = pre_treatment_state(panel, cohort);
        const DrDesign design(state, cohort.treated, CaseModelSpec{});
        for (int t : {35, 45, 60}) {
            const auto fit = fit_tau_alpha(panel, cohort, t);
            const auto cf = counterfactual_infections(panel, cohort, design, t);
            const auto adj = att_y_adjusted(panel, cohort, fit, cf);
            const auto reg = att_y_regression_did(panel, cohort, fit);
            const auto att_i = att_dr(panel, cohort, design, Var::I, t);
            const double lhs = adj.value - reg.value;
            const double rhs = fit.alpha * att_i.value;
            CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST_CASE("standard did on the outcome") {
    const Panel panel = build_panel(econ_config(5));
    const auto cohort = single_date_cohort(panel, 35);
    const auto a = att_y_standard_did(panel, cohort, 45);
    const auto b = att_did(panel, cohort, Var::Y, 45);
    CHECK(a.value == doctest::Approx(b.value));
}

TEST_CASE("pooled slope") {
    const Panel panel = build_panel(econ_config(6));
    const auto cohort = single_date_cohort(panel, 35);
    const std::vector<int> periods{40, 45, 50};
    const auto pooled = fit_econ(panel, cohort, periods, true);
    CHECK(pooled.pooled);
    CHECK(pooled.at(40).alpha == pooled.at(50).alpha);
    CHECK(std::abs(pooled.at(40).alpha + 0.1) < 0.02);
    const auto sep = fit_econ(panel, cohort, periods, false);
    CHECK(sep.at(45).alpha == doctest::Approx(fit_tau_alpha(panel, cohort, 45).alpha));
    CHECK_THROWS(sep.at(41));
}

TEST_CASE("degenerate econ designs") {
    const Panel panel = build_panel(econ_config(7));
    const auto cohort = single_date_cohort(panel, 35);
    // at the base period every case change is zero
    CHECK_THROWS_AS(fit_tau_alpha(panel, cohort, 34), CollinearityError);
}

TEST_CASE("diagnostics csv") {
    std::vector<EconDiagnostic> rows{{40, -0.1, 2.0, 3.5}};
    std::ostringstream s;
    write_econ_diagnostics_csv(s, rows);
    CHECK(s.str().rfind("t,alpha_t,tau_tilde_t,att_i_hat_t\n40,", 0) == 0);
}
