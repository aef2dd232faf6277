// Acceptance run: one line per criterion, PASS or FAIL with the measured
// numbers. Exit status is nonzero when any criterion fails.

#include "epipolicy/aggregation.hpp"
#include "epipolicy/case_estimators.hpp"
#include "epipolicy/econ_estimators.hpp"
#include "epipolicy/error.hpp"
#include "epipolicy/montecarlo.hpp"
#include "epipolicy/panel_io.hpp"
#include "epipolicy/scenario.hpp"
#include "epipolicy/sird.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace epipolicy;

#ifndef EPIPOLICY_DATA_DIR
#define EPIPOLICY_DATA_DIR "data"
#endif

namespace {

int g_failed = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail, double seconds) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << "AC" << id << ' ' << title << " | " << detail << " | "
              << std::fixed << std::setprecision(1) << seconds << " s" << std::endl;
    std::cout.unsetf(std::ios::fixed);
    if (!ok) ++g_failed;
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s << std::setprecision(prec) << v;
    return s.str();
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    MeanSe r;
    r.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / (n - 1.0) / n);
    return r;
}

ScenarioConfig table_row(std::int64_t policy, double ld, double lu, std::int64_t n) {
    ScenarioConfig c;
    c.policy_time = policy;
    c.lambda_d = ld;
    c.lambda_u = lu;
    c.n_locations = n;
    return c;
}

std::string row_text(const McRow& r) {
    return std::string(estimator_name(r.estimator)) + " bias " + fmt(r.bias) + " (mc se " + fmt(r.bias_se, 3) +
           ") rmse " + fmt(r.rmse) + " rej " + fmt(r.rejection, 3) + " R " + std::to_string(r.reps) +
           (r.failures ? " failed " + std::to_string(r.failures) : "");
}

// ---------------------------------------------------------------------------

void ac1() {
    Timer tm;
    Rng rng(20200601);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int failures = 0;
    long steps = 0;
    SirdParams p;
    SirdState s;
    for (int k = 0; k < 10000; ++k) {
        if (k % 100 == 0) {
            p.n = 1 + static_cast<std::int64_t>(u(rng) * 100000);
            p.beta = u(rng);
            p.lambda = u(rng) * 0.6;
            p.gamma = u(rng) * (1.0 - p.lambda) * 0.2;
            s = SirdState{};
            s.i = 1 + static_cast<std::int64_t>(u(rng) * static_cast<double>(p.n - 1));
            s.s = p.n - s.i;
            s.c = s.i;
        }
        s = step(s, p, rng);
        ++steps;
        if (!is_consistent(s, p.n) || s.c != p.n - s.s) ++failures;
    }
    const double secs = tm.seconds();
    report(1, "SIRD conservation", failures == 0 && secs < 5.0,
           std::to_string(steps) + " steps, " + std::to_string(failures) + " violations", secs);
}

void ac2() {
    Timer tm;
    SirdParams p;   // beta .08, lambda .04, gamma .003, N 1000
    const SirdState s{700, 200, 80, 20, 300};
    Rng rng(7);
    const int reps = 100000;
    std::vector<double> dc(reps), dr(reps), dd(reps);
    for (int k = 0; k < reps; ++k) {
        const auto n = step(s, p, rng);
        dc[k] = static_cast<double>(n.c - s.c);
        dr[k] = static_cast<double>(n.r - s.r);
        dd[k] = static_cast<double>(n.d - s.d);
    }
    const double want_c = p.beta * 200.0 / 1000.0 * 700.0;
    const double want_r = p.lambda * 200.0;
    const double want_d = p.gamma * 200.0;
    const auto c = mean_se(dc), r = mean_se(dr), d = mean_se(dd);
    const double zc = (c.mean - want_c) / c.se, zr = (r.mean - want_r) / r.se, zd = (d.mean - want_d) / d.se;
    const double secs = tm.seconds();
    const bool ok = std::abs(zc) < 4 && std::abs(zr) < 4 && std::abs(zd) < 4 && secs < 30.0;
    report(2, "transition moments", ok,
           "dC " + fmt(c.mean) + " vs " + fmt(want_c) + " (z " + fmt(zc, 2) + "), dR " + fmt(r.mean) + " vs " +
               fmt(want_r) + " (z " + fmt(zr, 2) + "), dD " + fmt(d.mean) + " vs " + fmt(want_d) + " (z " +
               fmt(zd, 2) + ")",
           secs);
}

McOptions mc_options(std::uint64_t seed) {
    McOptions o;
    o.reps = 200;
    o.horizon = 50;
    o.root_seed = seed;
    return o;
}

void ac3() {
    Timer tm;
    const auto a = run_scenario(table_row(150, 40, 60, 250), "a", mc_options(31));
    const auto b = run_scenario(table_row(150, 60, 60, 250), "b", mc_options(32));
    const auto& dr = a.find("a", EstimatorKind::DrCases);
    const auto& did = a.find("a", EstimatorKind::DidCases);
    const auto& did0 = b.find("b", EstimatorKind::DidCases);
    const bool dr_bias = std::abs(dr.bias) <= 3.0 * dr.bias_se && std::abs(dr.bias) < 0.15;
    const bool dr_rmse = dr.rmse >= 0.3 && dr.rmse <= 0.7;
    const bool did_bias = did.bias >= -4.0 && did.bias <= -2.0;
    const bool did0_bias = std::abs(did0.bias) <= 3.0 * did0.bias_se;
    const double secs = tm.seconds();
    report(3, "cases rows (150,40,60) and (150,60,60)", dr_bias && dr_rmse && did_bias && did0_bias && secs < 900,
           "(150,40,60) " + row_text(dr) + "; " + row_text(did) + "; (150,60,60) " + row_text(did0) +
               " | checks: dr bias " + (dr_bias ? "ok" : "no") + ", dr rmse in [0.3,0.7] " + (dr_rmse ? "ok" : "no") +
               ", did bias in [-4,-2] " + (did_bias ? "ok" : "no") + ", null did bias " + (did0_bias ? "ok" : "no"),
           secs);
}

void ac4() {
    Timer tm;
    std::vector<double> did_bias, dr_bias;
    std::string detail;
    bool dr_ok = true;
    std::uint64_t seed = 41;
    for (std::int64_t policy : {75, 150, 225}) {
        const auto rep = run_scenario(table_row(policy, 40, 80, 250), "p", mc_options(seed++));
        const auto& did = rep.find("p", EstimatorKind::DidCases);
        const auto& dr = rep.find("p", EstimatorKind::DrCases);
        did_bias.push_back(did.bias);
        dr_bias.push_back(dr.bias);
        if (!(dr.reps > 0 && std::abs(dr.bias) < 0.15)) dr_ok = false;
        detail += "t*=" + std::to_string(policy) + ": " + row_text(did) + "; " + row_text(dr) + ". ";
    }
    const bool monotone = std::abs(did_bias[0]) > std::abs(did_bias[1]) && std::abs(did_bias[1]) > std::abs(did_bias[2]);
    const double secs = tm.seconds();
    report(4, "policy timing rows", monotone && dr_ok,
           detail + "|did bias| decreasing " + (monotone ? "ok" : "no") + ", |dr bias| < 0.15 " + (dr_ok ? "ok" : "no"),
           secs);
}

void ac5() {
    Timer tm;
    McOptions o = mc_options(51);
    o.estimators = {EstimatorKind::AdjDidY, EstimatorKind::StdDidY, EstimatorKind::RegDidY};
    std::string detail;
    bool adj_ok = true;
    double std40 = 0, std80 = 0;
    for (double ld : {40.0, 60.0, 80.0}) {
        auto c = table_row(150, ld, 60, 250);
        c.econ = EconParams{};
        o.root_seed += 1;
        const auto rep = run_scenario(c, "e", o);
        const auto& adj = rep.find("e", EstimatorKind::AdjDidY);
        const auto& sd = rep.find("e", EstimatorKind::StdDidY);
        if (!(std::abs(adj.bias) <= 3.0 * adj.bias_se && adj.rejection >= 0.01 && adj.rejection <= 0.10)) adj_ok = false;
        if (ld == 40.0) std40 = sd.bias;
        if (ld == 80.0) std80 = sd.bias;
        detail += "lambda_d=" + fmt(ld, 3) + ": " + row_text(adj) + "; " + row_text(sd) + ". ";
    }
    const bool std_ok = std40 < -0.08 && std80 > 0.08;
    const double secs = tm.seconds();
    report(5, "economic outcome rows n=250", adj_ok && std_ok,
           detail + "adjusted unbiased with rejection in [0.01,0.10] " + (adj_ok ? "ok" : "no") +
               ", standard did signs (-,+) beyond 0.08 " + (std_ok ? "ok" : "no"),
           secs);
}

// Cross-sectional design with a known logistic propensity and a quadratic
// untreated outcome; the effect on the treated is 1 + 0.5 i.
struct DrDraw {
    double estimate;
    double truth;
};

DrDraw dr_draw(std::uint64_t seed, const CaseModelSpec& spec) {
    Rng rng(seed);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u;
    const std::size_t n = 1000;
    PreTreatmentState st;
    std::vector<std::uint8_t> d(n);
    std::vector<double> y(n);
    double truth = 0.0, n1 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double i = 20.0 + 5.0 * z(rng);
        const double s = 900.0 + 30.0 * z(rng);
        const double p = 1.0 / (1.0 + std::exp(-(-0.5 + 0.25 * (i - 20.0) - 0.02 * (s - 900.0))));
        d[k] = u(rng) < p ? 1 : 0;
        const double y0 = 5.0 + 0.8 * i + 0.05 * i * i - 0.01 * s + 0.002 * i * s / 10.0 + z(rng);
        const double effect = 1.0 + 0.5 * (i - 20.0) / 5.0;
        y[k] = y0 + (d[k] ? effect : 0.0);
        if (d[k]) {
            truth += effect;
            n1 += 1.0;
        }
        st.i_pre.push_back(i);
        st.s_pre.push_back(s);
    }
    const DrDesign design(st, d, spec);
    return {design.estimate(y).value, truth / n1};
}

void ac6() {
    Timer tm;
    CaseModelSpec a;   // correct propensity, outcome regression left out
    a.propensity.degree = 1;
    a.outcome = FeatureSpec::intercept_only();
    CaseModelSpec b;   // correct outcome regression, propensity left out
    b.propensity = FeatureSpec::intercept_only();
    b.outcome.degree = 2;
    std::vector<double> ea, eb, naive;
    CaseModelSpec both_wrong;
    both_wrong.propensity = FeatureSpec::intercept_only();
    both_wrong.outcome = FeatureSpec::intercept_only();
    for (int r = 0; r < 200; ++r) {
        const std::uint64_t seed = derive_seed(6, StreamTag::Auxiliary, static_cast<std::uint64_t>(r));
        const auto da = dr_draw(seed, a);
        const auto db = dr_draw(seed, b);
        const auto dn = dr_draw(seed, both_wrong);
        ea.push_back(da.estimate - da.truth);
        eb.push_back(db.estimate - db.truth);
        naive.push_back(dn.estimate - dn.truth);
    }
    const auto ma = mean_se(ea), mb = mean_se(eb), mn = mean_se(naive);
    const bool ok = std::abs(ma.mean) <= 3.0 * ma.se && std::abs(mb.mean) <= 3.0 * mb.se;
    report(6, "double robustness", ok,
           "wrong outcome model: bias " + fmt(ma.mean) + " (mc se " + fmt(ma.se, 3) + "); wrong propensity: bias " +
               fmt(mb.mean) + " (mc se " + fmt(mb.se, 3) + "); both wrong (reference): bias " + fmt(mn.mean) +
               " (mc se " + fmt(mn.se, 3) + ")",
           tm.seconds());
}

void ac7() {
    Timer tm;
    auto cfg = table_row(150, 40, 60, 250);
    cfg.t_total = 151;   // only t* is needed; earlier periods do not depend on the horizon
    const int reps = 200;
    std::vector<double> did;
    for (int r = 0; r < reps; ++r) {
        auto c = cfg;
        c.root_seed = derive_seed(7, StreamTag::Replication, static_cast<std::uint64_t>(r));
        const Panel panel = build_panel(c);
        const auto cohort = single_date_cohort(panel, 150);
        did.push_back(att_did_cases(panel, cohort, 150).value);
    }
    const auto sim = mean_se(did);
    auto oc = cfg;
    oc.root_seed = 70707;
    const auto oracle = did_impact_bias_oracle(oc, reps);
    const double tol = 3.0 * std::sqrt(sim.se * sim.se + oracle.se * oracle.se);
    const bool ok = std::abs(sim.mean - oracle.value) <= tol;
    report(7, "on-impact DID bias oracle", ok,
           "simulated DID at t* " + fmt(sim.mean) + " (mc se " + fmt(sim.se, 3) + "), oracle " + fmt(oracle.value) +
               " (mc se " + fmt(oracle.se, 3) + "), |diff| " + fmt(std::abs(sim.mean - oracle.value), 3) +
               " <= " + fmt(tol, 3),
           tm.seconds());
}

void ac8() {
    Timer tm;
    double worst = 0.0;
    int checked = 0;
    for (double ld : {40.0, 60.0, 80.0})
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            auto c = table_row(150, ld, 60, 250);
            c.econ = EconParams{};
            c.root_seed = derive_seed(8, StreamTag::Replication, seed * 10 + static_cast<std::uint64_t>(ld));
            const Panel panel = build_panel(c);
            const auto cohort = single_date_cohort(panel, 150);
            const auto state = pre_treatment_state(panel, cohort);
            const DrDesign design(state, cohort.treated, CaseModelSpec{});
            for (int t = 150; t < 200; t += 7) {
                const auto fit = fit_tau_alpha(panel, cohort, t);
                const auto cf = counterfactual_infections(panel, cohort, design, t);
                const double adj = att_y_adjusted(panel, cohort, fit, cf).value;
                const double reg = att_y_regression_did(panel, cohort, fit).value;
                const double rhs = fit.alpha * att_dr(panel, cohort, design, Var::I, t).value;
                const double rel = std::abs((adj - reg) - rhs) / std::max(std::abs(rhs), 1e-300);
                worst = std::max(worst, std::abs(rhs) > 1e-12 ? rel : std::abs((adj - reg) - rhs));
                ++checked;
            }
        }
    report(8, "decomposition identity", worst <= 1e-10,
           std::to_string(checked) + " (panel, t) pairs, worst relative error " + fmt(worst, 3), tm.seconds());
}

void ac9() {
    Timer tm;
    // Null: randomized timing (lambda_d = lambda_u) and no policy effect.
    auto cfg = table_row(150, 60, 60, 250);
    const int reps = 200;
    const int horizon = 50;
    GridOptions go;
    go.estimator = EstimatorKind::DrCases;
    go.horizon = horizon;
    BootstrapOptions bo;
    long tests = 0, rejections = 0;
    int covered = 0, done = 0;
    for (int r = 0; r < reps; ++r) {
        auto c = cfg;
        c.root_seed = derive_seed(9, StreamTag::Replication, static_cast<std::uint64_t>(r));
        const Panel panel = build_panel(c);
        try {
            auto es = event_study(group_time_att(panel, go));
            Rng rng = make_stream(c.root_seed, StreamTag::Bootstrap);
            attach_inference(es, bo, rng);
            bool cover = true;
            for (const auto& p : es.points) {
                ++tests;
                if (p.pw_lo > 0.0 || p.pw_hi < 0.0) ++rejections;
                if (p.band_lo > 0.0 || p.band_hi < 0.0) cover = false;
            }
            covered += cover ? 1 : 0;
            ++done;
        } catch (const Error&) {
        }
    }
    const double rej = static_cast<double>(rejections) / static_cast<double>(tests);
    const double cov = static_cast<double>(covered) / static_cast<double>(done);
    const bool ok = rej >= 0.01 && rej <= 0.10 && cov >= 0.88 && done == reps;
    report(9, "bootstrap calibration under the null", ok,
           "pointwise 5% rejection " + fmt(rej, 3) + " over " + std::to_string(tests) + " tests; uniform band covers 0 in " +
               fmt(cov, 3) + " of " + std::to_string(done) + " replications",
           tm.seconds());
}

void ac10() {
    Timer tm;
    double worst = 0.0;
    int panels = 0;
    Rng rng(10);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const std::size_t n = 5 + static_cast<std::size_t>(u(rng) * 500);
        std::vector<std::uint8_t> d(n);
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = 0.01 + 0.98 * u(rng);
            d[i] = u(rng) < p[i] ? 1 : 0;
        }
        d[0] = 1;
        d[1] = 0;
        const auto w = hajek_weights(d, p);
        double tot = 0, t1 = 0, t0 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            tot += w[i];
            (d[i] ? t1 : t0) += w[i];
        }
        const double nn = static_cast<double>(n);
        worst = std::max({worst, std::abs(tot / nn), std::abs(t1 / nn - 1.0), std::abs(t0 / nn + 1.0)});
    }
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto c = table_row(150, 40, 60, 250);
        c.t_total = 151;
        c.root_seed = seed;
        const Panel panel = build_panel(c);
        const auto cohort = single_date_cohort(panel, 150);
        const DrDesign design(pre_treatment_state(panel, cohort), cohort.treated, CaseModelSpec{});
        const auto& w = design.weights();
        double tot = 0, t1 = 0, t0 = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            tot += w[i];
            (cohort.treated[i] ? t1 : t0) += w[i];
        }
        const double nn = static_cast<double>(w.size());
        worst = std::max({worst, std::abs(tot / nn), std::abs(t1 / nn - 1.0), std::abs(t0 / nn + 1.0)});
        ++panels;
    }
    report(10, "Hajek identities", worst <= 1e-12,
           "200 random weight sets and " + std::to_string(panels) + " simulated panels, worst deviation " +
               fmt(worst, 3),
           tm.seconds());
}

void ac11() {
    Timer tm;
    std::vector<std::string> problems;
    auto need = [&](bool ok, const std::string& what) {
        if (!ok) problems.push_back(what);
    };

    // per million
    RawSeries s;
    RawRow row;
    row.location = "X";
    row.date = parse_date("2020-03-08");
    row.cum_cases = 500;
    row.population = 5000000;
    s.rows.push_back(row);
    row.location = "Y";
    row.population = 1000000;
    row.cum_cases = 123;
    s.rows.push_back(row);
    const auto pm = per_million(s);
    need(pm.rows[0].cum_cases == 100.0, "500 cases in 5M is not 100 per million");
    need(pm.rows[1].cum_cases == 123.0, "population 1M changed the values");
    bool twice = false;
    try {
        per_million(pm);
    } catch (const ParameterError&) {
        twice = true;
    }
    need(twice, "double scaling not refused");

    // active cases
    const std::vector<double> c1{0, 1, 3, 6, 10};
    need(active_cases(c1, 5).active == c1, "window covers all cases");
    const std::vector<double> flat(9, 4.0);
    const auto fa = active_cases(flat, 5).active;
    need(fa[5] == 0 && fa[8] == 0, "constant C is not 0 after the window");
    std::vector<double> c3(11, 0.0);
    for (std::size_t t = 0; t < 11; ++t) c3[t] = 10.0 * static_cast<double>(t);
    c3[5] = 40;
    c3[10] = 100;
    need(active_cases(c3, 5).active[10] == 60.0, "I_10 = C_10 - C_5");

    // group bins
    std::vector<std::pair<std::string, std::optional<std::chrono::sys_days>>> ad{
        {"CA", parse_date("2020-03-19")}, {"IL", parse_date("2020-03-21")}, {"NJ", parse_date("2020-03-21")},
        {"NY", parse_date("2020-03-22")}, {"PA", parse_date("2020-03-23")}};
    const auto bins = assign_groups(ad, 5, parse_date("2020-03-18"));
    need(bins.bin.at("CA") == 0 && bins.bin.at("IL") == 0 && bins.bin.at("NJ") == 0 && bins.bin.at("NY") == 0,
         "Mar 18 group");
    need(bins.bin.at("PA") == 1, "boundary date goes to the later bin");
    std::vector<std::pair<std::string, std::optional<std::chrono::sys_days>>> none{{"A", std::nullopt}};
    need(!assign_groups(none, 5).bin.at("A").has_value(), "no adopters");

    // end to end on the bundled synthetic states file
    std::string e2e;
    try {
        const auto raw = load_panel_csv(std::string(EPIPOLICY_DATA_DIR) + "/synthetic_states.csv");
        IngestOptions io;
        io.anchor = parse_date("2020-03-18");
        const auto ing = raw_to_panel(raw, io);
        GridOptions go;
        go.estimator = EstimatorKind::DrCases;
        go.model.propensity.use_susceptible = false;
        go.model.outcome.use_susceptible = false;
        for (const auto& cov : ing.panel.covariate_names()) {
            go.model.propensity.covariates.push_back(cov);
            go.model.outcome.covariates.push_back(cov);
        }
        const auto grid = group_time_att(ing.panel, go);
        std::size_t dropped = 0, missing = 0;
        for (const auto& cell : grid.cells) {
            dropped += cell.n_dropped;
            missing += cell.missing ? 1 : 0;
            if (cell.missing) need(!cell.reason.empty(), "missing cell without a reason");
        }
        auto es = event_study(grid);
        Rng rng(11);
        attach_inference(es, BootstrapOptions{}, rng);
        std::ostringstream out;
        write_estimates_csv(out, es);
        std::istringstream in(out.str());
        std::string line;
        std::getline(in, line);
        need(line == "e,estimate,se,band_lo,band_hi,n_treated,n_untreated,n_dropped", "event-study header");
        std::size_t rows = 0;
        while (std::getline(in, line)) {
            ++rows;
            std::istringstream ls(line);
            std::string f;
            std::vector<double> v;
            while (std::getline(ls, f, ',')) v.push_back(std::stod(f));
            need(v.size() == 8 && std::isfinite(v[1]) && std::isfinite(v[2]) && v[3] <= v[1] && v[1] <= v[4],
                 "malformed event-study row " + line);
        }
        need(rows == es.points.size() && rows > 0, "event-study row count");
        need(dropped + missing > 0, "no trimming diagnostics");
        e2e = std::to_string(ing.panel.locations()) + " states, " + std::to_string(grid.groups.size()) +
              " groups, " + std::to_string(rows) + " event times, " + std::to_string(dropped) +
              " location-cell drops, " + std::to_string(missing) + " cells missing after trimming";
    } catch (const std::exception& e) {
        problems.push_back(std::string("end-to-end run threw: ") + e.what());
    }
    std::string detail = "panel-io properties and synthetic end-to-end: " + e2e;
    for (const auto& p : problems) detail += "; " + p;
    report(11, "panel-io pipeline", problems.empty(), detail, tm.seconds());
}

}  // namespace

int main() {
    ac1();
    ac2();
    ac3();
    ac4();
    ac5();
    ac6();
    ac7();
    ac8();
    ac9();
    ac10();
    ac11();
    std::cout << (g_failed ? std::to_string(g_failed) + " of 11 criteria failed" : std::string("all 11 criteria passed"))
              << std::endl;
    return g_failed ? 1 : 0;
}
