#include <doctest.h>

#include "epipolicy/aggregation.hpp"
#include "epipolicy/case_estimators.hpp"
#include "epipolicy/error.hpp"
#include "epipolicy/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

using namespace epipolicy;

namespace {

ScenarioConfig staggered(std::uint64_t seed) {
    ScenarioConfig c;
    c.n_locations = 300;
    c.t_total = 70;
    c.lambda_d = 10;
    c.lambda_u = 10;
    c.adoption_dates = {30, 36};
    c.adoption_probs = {0.25, 0.25};
    c.root_seed = seed;
    return c;
}

}  // namespace

TEST_CASE("estimator names round trip") {
    for (auto k : {EstimatorKind::DidCases, EstimatorKind::DrCases, EstimatorKind::IpwCases, EstimatorKind::RaCases,
                   EstimatorKind::StdDidY, EstimatorKind::RegDidY, EstimatorKind::AdjDidY})
        CHECK(parse_estimator(estimator_name(k)) == k);
    CHECK_THROWS_AS(parse_estimator("ols"), ParameterError);
    CHECK(uses_outcome_y(EstimatorKind::AdjDidY));
    CHECK_FALSE(uses_outcome_y(EstimatorKind::DrCases));
    CHECK(uses_propensity(EstimatorKind::IpwCases));
    CHECK_FALSE(uses_propensity(EstimatorKind::RaCases));
}

TEST_CASE("a single-group grid reproduces the single-date estimator") {
    ScenarioConfig c;
    c.n_locations = 200;
    c.t_total = 60;
    c.policy_time = 30;
    c.lambda_d = 10;
    c.lambda_u = 14;
    const Panel panel = build_panel(c);
    GridOptions o;
    o.estimator = EstimatorKind::DidCases;
    o.comparison = Comparison::NeverOnly;
    const auto grid = group_time_att(panel, o);
    const auto cohort = single_date_cohort(panel, 30);
    for (int t : {30, 40, 59}) {
        const auto* cell = grid.find(30, t);
        REQUIRE(cell != nullptr);
        REQUIRE_FALSE(cell->missing);
        const auto ref = att_did_cases(panel, cohort, t);
        CHECK(cell->estimate == doctest::Approx(ref.value).epsilon(1e-12));
        // every location is in the cohort, so the influence is unchanged
        for (std::size_t u = 0; u < cohort.size(); ++u)
            CHECK(cell->influence[cohort.units[u]] == doctest::Approx(ref.influence[u]));
    }
    CHECK(grid.find(30, 29) == nullptr);

    const auto es = event_study(grid);
    CHECK(es.index_name == "e");
    CHECK(es.points.size() == 30);
    CHECK(es.points[10].estimate == doctest::Approx(grid.find(30, 40)->estimate));
}

TEST_CASE("event study weights groups by size") {
    const Panel panel = build_panel(staggered(3));
    GridOptions o;
    o.estimator = EstimatorKind::DidCases;
    const auto grid = group_time_att(panel, o);
    CHECK(grid.groups == std::vector<int>{30, 36});
    const double n30 = static_cast<double>(grid.group_size.at(30));
    const double n36 = static_cast<double>(grid.group_size.at(36));
    const auto es = event_study(grid);
    for (int e : {0, 5, 20}) {
        const double want = (n30 * grid.find(30, 30 + e)->estimate + n36 * grid.find(36, 36 + e)->estimate) / (n30 + n36);
        CHECK(es.points[static_cast<std::size_t>(e)].estimate == doctest::Approx(want).epsilon(1e-12));
    }
    // only the early group reaches the last event times
    CHECK(es.points.back().index == 39);
    CHECK(es.points.back().estimate == doctest::Approx(grid.find(30, 69)->estimate));
    for (std::size_t j = 0; j < es.points.size(); ++j) {
        const auto col = es.influence.column(j);
        CHECK(std::abs(std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size())) < 1e-9);
    }

    // not-yet-treated comparisons include the later group before it adopts
    const auto* early = grid.find(30, 33);
    REQUIRE(early);
    CHECK(early->n_untreated == panel.locations() - grid.group_size.at(30));
    o.comparison = Comparison::NeverOnly;
    const auto never = group_time_att(panel, o);
    CHECK(never.find(30, 33)->n_untreated == early->n_untreated - grid.group_size.at(36));
}

TEST_CASE("overall effect and grid file") {
    const Panel panel = build_panel(staggered(4));
    GridOptions o;
    o.estimator = EstimatorKind::DrCases;
    o.horizon = 10;
    const auto grid = group_time_att(panel, o);
    auto es = event_study(grid);
    CHECK(es.points.size() == 10);
    Rng rng(1);
    BootstrapOptions b;
    b.draws = 300;
    attach_inference(es, b, rng);
    const auto all = overall_att(es, 10, b, rng);
    double m = 0;
    for (const auto& p : es.points) m += p.estimate;
    CHECK(all.estimate == doctest::Approx(m / 10.0));
    CHECK(all.se > 0.0);
    CHECK(all.p_value >= 0.0);
    CHECK(all.p_value <= 1.0);
    CHECK_THROWS_AS(overall_att(es, 11, b, rng), Error);

    std::ostringstream out;
    write_grid_csv(out, grid, b, rng);
    const auto text = out.str();
    CHECK(text.rfind("g,t,estimate,se,band_lo,band_hi,n_treated,n_untreated,n_dropped\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 20);
}

TEST_CASE("cells without comparisons are reported missing") {
    auto c = staggered(5);
    c.adoption_probs = {0.5, 0.5};   // nobody is never treated
    const Panel panel = build_panel(c);
    GridOptions o;
    o.estimator = EstimatorKind::DidCases;
    const auto grid = group_time_att(panel, o);
    const auto* late = grid.find(36, 40);
    REQUIRE(late);
    CHECK(late->missing);
    CHECK(late->reason == "no comparison locations");
    const auto* early = grid.find(30, 31);
    REQUIRE(early);
    CHECK_FALSE(early->missing);
    o.pooled_alpha = true;
    o.estimator = EstimatorKind::RegDidY;
    CHECK_THROWS_AS(group_time_att(panel, o), ParameterError);
}
