// epipolicy: simulate panels, run Monte Carlo suites, estimate policy effects
// and ingest observed data.

#include "epipolicy/aggregation.hpp"
#include "epipolicy/error.hpp"
#include "epipolicy/manifest.hpp"
#include "epipolicy/montecarlo.hpp"
#include "epipolicy/panel_io.hpp"
#include "epipolicy/scenario.hpp"
#include "epipolicy/simd.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace epipolicy;

namespace {

std::uint64_t default_seed() {
    if (const char* env = std::getenv("EPIPOLICY_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError(std::string("EPIPOLICY_SEED is not an unsigned integer: '") + env + "'");
        }
    }
    return 20200601;
}

std::string now_iso() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string config_text(const ScenarioConfig& c) {
    std::ostringstream s;
    write_config(s, c);
    return s.str();
}

RunManifest base_manifest(const std::string& command, std::uint64_t seed) {
    RunManifest m;
    m.set("command", command);
    m.set("tool_version", kToolVersion);
    m.set("root_seed", std::to_string(seed));
    m.set("simd", std::string(simd::name(simd::active().isa)));
    m.set("started", now_iso());
    return m;
}

void finish_manifest(RunManifest& m, const std::string& path, std::chrono::steady_clock::time_point t0) {
    m.set("wall_clock_seconds",
          std::to_string(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()));
    write_manifest_atomic(path, m);
}

struct ModelFlags {
    int degree = 3;
    bool no_interactions = false;
    bool no_susceptible = false;
    std::vector<std::string> covariates;
    double trim_cap = 0.95;
    bool no_trim = false;
    bool symmetric_trim = false;
    std::string comparison = "notyet";
    bool pooled_alpha = false;

    GridOptions grid(EstimatorKind kind) const {
        GridOptions g;
        g.estimator = kind;
        FeatureSpec f;
        f.degree = degree;
        f.interactions = !no_interactions;
        f.use_susceptible = !no_susceptible;
        f.covariates = covariates;
        g.model.propensity = f;
        g.model.outcome = f;
        if (no_trim) g.trim_cap.reset();
        else g.trim_cap = trim_cap;
        g.symmetric_trim = symmetric_trim;
        g.comparison = comparison == "never" ? Comparison::NeverOnly : Comparison::NeverAndNotYet;
        g.pooled_alpha = pooled_alpha;
        return g;
    }
};

void add_model_flags(CLI::App* app, ModelFlags& f) {
    app->add_option("--degree", f.degree, "Polynomial degree of the propensity and outcome models")
        ->check(CLI::Range(0, 6));
    app->add_flag("--no-interactions", f.no_interactions, "Pure powers only");
    app->add_flag("--no-susceptible", f.no_susceptible, "Condition on active cases (and covariates) only");
    app->add_option("--covariate", f.covariates, "Panel covariate entering the models additively (repeatable)");
    app->add_option("--trim-cap", f.trim_cap, "Drop locations with propensity above this cap (default 0.95)")
        ->check(CLI::Range(0.5, 1.0));
    app->add_flag("--no-trim", f.no_trim, "Keep every location regardless of its propensity");
    app->add_flag("--symmetric-trim", f.symmetric_trim, "Also drop units with propensity below 1 - cap");
    app->add_option("--comparison", f.comparison, "Comparison group: notyet (never + not yet treated) or never")
        ->check(CLI::IsMember({"notyet", "never"}));
    app->add_flag("--pooled-alpha", f.pooled_alpha, "One infection slope for all periods (needs --comparison never)");
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out,
                 const std::string& paths_out) {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioConfig cfg = config_path.empty() ? ScenarioConfig{} : load_config(config_path);
    cfg.root_seed = seed.value_or(config_path.empty() ? default_seed() : cfg.root_seed);
    cfg.validate();
    const Panel panel = build_panel(cfg);
    std::ostringstream s;
    write_panel_csv(s, panel);
    write_file_atomic(out, s.str());
    auto m = base_manifest("simulate", cfg.root_seed);
    m.set("config", config_path.empty() ? "(defaults)" : config_path);
    m.set("config_snapshot", config_text(cfg));
    m.set("output", out);
    m.set("locations", std::to_string(panel.locations()));
    m.set("periods", std::to_string(panel.periods()));
    if (!paths_out.empty()) {
        std::vector<SirdPath> paths;
        for (std::size_t l = 0; l < panel.locations(); ++l) {
            SirdPath p;
            p.n = cfg.sird.n;
            for (std::size_t t = 0; t < panel.periods(); ++t)
                p.states.push_back({static_cast<std::int64_t>(panel.at(Var::S, l, t)),
                                    static_cast<std::int64_t>(panel.at(Var::I, l, t)),
                                    static_cast<std::int64_t>(panel.at(Var::R, l, t)),
                                    static_cast<std::int64_t>(panel.at(Var::D, l, t)),
                                    static_cast<std::int64_t>(panel.at(Var::C, l, t))});
            paths.push_back(std::move(p));
        }
        std::ostringstream ps;
        write_paths_csv(ps, paths);
        write_file_atomic(paths_out, ps.str());
        m.set("paths_output", paths_out);
    }
    finish_manifest(m, out + ".manifest", t0);
    std::cout << "wrote " << out << " (" << panel.locations() << " locations x " << panel.periods() << " periods)\n";
    return 0;
}

int cmd_montecarlo(const std::string& suite_name, int reps, std::uint64_t seed, const std::string& out, int horizon,
                   const std::vector<std::string>& estimators, const ModelFlags& flags, int draws, double level,
                   bool uniform, unsigned threads) {
    const auto t0 = std::chrono::steady_clock::now();
    const Suite suite = parse_suite(suite_name);
    McOptions o;
    o.reps = reps;
    o.horizon = horizon;
    o.root_seed = seed;
    o.bootstrap.draws = draws;
    o.bootstrap.level = level;
    o.uniform_test = uniform;
    o.threads = threads;
    o.grid = flags.grid(EstimatorKind::DrCases);
    if (!estimators.empty()) {
        o.estimators.clear();
        for (const auto& e : estimators) o.estimators.push_back(parse_estimator(e));
    } else if (suite == Suite::Econ) {
        o.estimators = {EstimatorKind::AdjDidY, EstimatorKind::StdDidY, EstimatorKind::RegDidY};
    }
    const auto report = table_suite(suite, o);
    std::ostringstream csv, txt;
    write_report_csv(csv, report);
    write_report_text(txt, report);
    write_file_atomic(out + ".csv", csv.str());
    write_file_atomic(out + ".txt", txt.str());
    std::cout << txt.str();
    auto m = base_manifest("montecarlo " + suite_name, seed);
    m.set("reps", std::to_string(reps));
    m.set("horizon", std::to_string(horizon));
    m.set("bootstrap_draws", std::to_string(draws));
    m.set("level", std::to_string(level));
    m.set("uniform_test", uniform ? "true" : "false");
    std::string names;
    for (auto k : o.estimators) names += std::string(names.empty() ? "" : ",") + estimator_name(k);
    m.set("estimators", names);
    m.set("outputs", out + ".csv," + out + ".txt");
    int failures = 0;
    for (const auto& r : report.rows) failures += r.failures;
    m.set("failed_replications", std::to_string(failures));
    finish_manifest(m, out + ".manifest", t0);
    return 0;
}

int cmd_estimate(const std::string& input, bool raw, const std::string& estimator, const ModelFlags& flags,
                 int draws, double level, int horizon, int group_window, int active_window, const std::string& anchor,
                 std::uint64_t seed, const std::string& out, const std::string& weighting) {
    const auto t0 = std::chrono::steady_clock::now();
    Panel panel;
    if (raw) {
        IngestOptions io;
        io.group_window = group_window;
        io.active_window = active_window;
        if (!anchor.empty()) io.anchor = parse_date(anchor);
        panel = raw_to_panel(load_panel_csv(input), io).panel;
    } else {
        std::ifstream in(input);
        if (!in) throw IoError("cannot open panel file '" + input + "'");
        panel = read_panel_csv(in);
    }
    panel.validate();
    const EstimatorKind kind = parse_estimator(estimator);
    GridOptions go = flags.grid(kind);
    go.horizon = horizon;
    const auto grid = group_time_att(panel, go);
    auto es = event_study(grid, weighting == "population" ? GroupWeighting::Population : GroupWeighting::Count);
    if (es.points.empty()) throw InfeasibleError("no estimable group-time cell; see the grid file for reasons");
    BootstrapOptions bo;
    bo.draws = draws;
    bo.level = level;
    Rng rng = make_stream(seed, StreamTag::Bootstrap);
    attach_inference(es, bo, rng);
    const auto test = test_zero(es);

    std::ostringstream es_csv, grid_csv, dropped, diag;
    write_estimates_csv(es_csv, es);
    Rng grid_rng = make_stream(seed, StreamTag::Bootstrap, 1);
    write_grid_csv(grid_csv, grid, bo, grid_rng);
    dropped << "g,location_id\n";
    std::set<std::pair<int, std::string>> seen;
    std::vector<EconDiagnostic> diags;
    std::ostringstream missing;
    for (const auto& c : grid.cells) {
        for (const auto& id : c.dropped_ids)
            if (seen.emplace(c.g, id).second) dropped << c.g << ',' << id << '\n';
        if (!c.missing && (kind == EstimatorKind::RegDidY || kind == EstimatorKind::AdjDidY))
            diags.push_back({c.t, c.alpha, c.tau_tilde, c.att_i});
        if (c.missing) missing << "g=" << c.g << " t=" << c.t << ": " << c.reason << "; ";
    }
    write_file_atomic(out + "_event_study.csv", es_csv.str());
    write_file_atomic(out + "_grid.csv", grid_csv.str());
    write_file_atomic(out + "_dropped.csv", dropped.str());
    std::string outputs = out + "_event_study.csv," + out + "_grid.csv," + out + "_dropped.csv";
    if (!diags.empty()) {
        write_econ_diagnostics_csv(diag, diags);
        write_file_atomic(out + "_diagnostics.csv", diag.str());
        outputs += "," + out + "_diagnostics.csv";
    }

    int h = 0;
    while (h < static_cast<int>(es.points.size()) && es.points[static_cast<std::size_t>(h)].index == h) ++h;
    auto m = base_manifest("estimate", seed);
    m.set("input", input);
    m.set("input_kind", raw ? "raw" : "panel");
    m.set("estimator", estimator);
    m.set("degree", std::to_string(flags.degree));
    m.set("trim_cap", flags.no_trim ? "none" : std::to_string(flags.trim_cap));
    m.set("comparison", flags.comparison);
    m.set("bootstrap_draws", std::to_string(draws));
    m.set("level", std::to_string(level));
    m.set("horizon", std::to_string(horizon));
    m.set("uniform_critical_value", std::to_string(es.crit_uniform));
    m.set("joint_p_value", std::to_string(test.p_joint));
    m.set("dropped_locations", std::to_string(seen.size()));
    if (h > 0) {
        Rng orng = make_stream(seed, StreamTag::Bootstrap, 2);
        const auto overall = overall_att(es, h, bo, orng);
        m.set("overall_att", std::to_string(overall.estimate));
        m.set("overall_se", std::to_string(overall.se));
        m.set("overall_horizon", std::to_string(h));
        std::cout << "overall effect over e=0.." << h - 1 << ": " << overall.estimate << " (se " << overall.se << ")\n";
    }
    if (!missing.str().empty()) m.set("missing_cells", missing.str());
    m.set("outputs", outputs);
    finish_manifest(m, out + ".manifest", t0);
    std::cout << "wrote " << outputs << "\n";
    std::cout << "joint test of zero effects: sup-t p = " << test.p_joint << ", dropped " << seen.size()
              << " location(s)\n";
    return 0;
}

int cmd_ingest(const std::string& input, const std::string& out, int active_window, int group_window,
               const std::string& anchor, bool no_normalize, const SchemaMapping& mapping) {
    const auto t0 = std::chrono::steady_clock::now();
    IngestOptions io;
    io.active_window = active_window;
    io.group_window = group_window;
    io.normalize = !no_normalize;
    if (!anchor.empty()) io.anchor = parse_date(anchor);
    const auto raw = load_panel_csv(input, mapping);
    const auto res = raw_to_panel(raw, io);
    std::ostringstream s;
    write_panel_csv(s, res.panel);
    write_file_atomic(out, s.str());
    auto m = base_manifest("ingest", 0);
    m.set("input", input);
    m.set("output", out);
    m.set("active_window", std::to_string(active_window));
    m.set("group_window", std::to_string(group_window));
    m.set("anchor", format_date(res.bins.anchor));
    m.set("per_million", io.normalize ? "true" : "false");
    std::string starts;
    for (auto d : res.bins.bin_start) starts += (starts.empty() ? "" : ",") + format_date(d);
    m.set("group_starts", starts);
    std::string clamps;
    for (const auto& [loc, k] : res.clamped_increments) clamps += loc + ":" + std::to_string(k) + " ";
    if (!clamps.empty()) {
        m.set("clamped_increments", clamps);
        std::cerr << "warning: negative daily increments clamped to 0: " << clamps << "\n";
    }
    finish_manifest(m, out + ".manifest", t0);
    std::cout << "wrote " << out << " (" << res.panel.locations() << " locations, " << res.bins.bin_start.size()
              << " adoption groups)\n";
    return 0;
}

const char* kPlotScript = R"(#!/usr/bin/env python3
# Event-study plot from an epipolicy estimates file.
import csv
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

src = sys.argv[1] if len(sys.argv) > 1 else "@INPUT@"
dst = sys.argv[2] if len(sys.argv) > 2 else "@OUTPUT@"
with open(src) as f:
    rows = list(csv.DictReader(f))
key = "e" if "e" in rows[0] else "t"
x = [int(r[key]) for r in rows]
est = [float(r["estimate"]) for r in rows]
lo = [float(r["band_lo"]) for r in rows]
hi = [float(r["band_hi"]) for r in rows]
fig, ax = plt.subplots(figsize=(7, 4))
ax.fill_between(x, lo, hi, alpha=0.25, label="uniform band")
ax.plot(x, est, marker="o", ms=3, label="estimate")
ax.axhline(0.0, color="black", lw=0.8)
ax.set_xlabel("event time" if key == "e" else "period")
ax.set_ylabel("effect")
ax.legend()
fig.tight_layout()
fig.savefig(dst, dpi=150)
)";

int cmd_plot_script(const std::string& input, const std::string& image, const std::string& out) {
    std::string text = kPlotScript;
    auto replace = [&](const std::string& from, const std::string& to) {
        for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size()))
            text.replace(pos, from.size(), to);
    };
    replace("@INPUT@", input);
    replace("@OUTPUT@", image);
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        write_file_atomic(out, text);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Policy evaluation during an epidemic: simulation, estimation and Monte Carlo"};
    app.require_subcommand(1);
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--threads", threads, "Worker threads for Monte Carlo replications")->check(CLI::PositiveNumber);
    std::string simd_choice;
    app.add_option("--simd", simd_choice, "Kernel variant: scalar, avx2 or neon (default: best available)");

    std::optional<std::uint64_t> seed;
    auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Root seed (default: $EPIPOLICY_SEED or 20200601)");
    };

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate a panel from a scenario config");
    std::string config_path, sim_out = "panel.csv", paths_out;
    sim->add_option("--config", config_path, "Scenario config (key = value); defaults when omitted")
        ->check(CLI::ExistingFile);
    sim->add_option("--out", sim_out, "Panel CSV path");
    sim->add_option("--paths-out", paths_out, "Also write per-location SIRD paths");
    add_seed(sim);

    // montecarlo
    auto* mc = app.add_subcommand("montecarlo", "Run a Monte Carlo table suite");
    std::string suite;
    int reps = 200, mc_horizon = 50, draws = 999;
    double level = 0.95;
    bool uniform = false;
    std::string mc_out = "mc_report";
    std::vector<std::string> mc_estimators;
    ModelFlags mc_flags;
    mc->add_option("suite", suite, "cases or econ")->required();
    mc->add_option("--reps", reps, "Replications per scenario row")->check(CLI::Range(2, 100000));
    mc->add_option("--horizon", mc_horizon, "Event times averaged into the overall effect")->check(CLI::PositiveNumber);
    mc->add_option("--estimator", mc_estimators, "Estimator to run (repeatable)");
    mc->add_option("--bootstrap-draws", draws, "Multiplier bootstrap draws")->check(CLI::Range(100, 1000000));
    mc->add_option("--level", level, "Confidence level")->check(CLI::Range(0.5, 0.999));
    mc->add_flag("--uniform", uniform, "Reject when the uniform band misses the true path");
    mc->add_option("--out", mc_out, "Output prefix (.csv, .txt, .manifest)");
    add_model_flags(mc, mc_flags);
    add_seed(mc);

    // estimate
    auto* est = app.add_subcommand("estimate", "Estimate event-study effects on a panel");
    std::string input, estimator = "dr-cases", est_out = "estimates", weighting = "count", est_anchor;
    bool raw = false;
    int est_horizon = 0, group_window = 5, active_window = 5;
    int est_draws = 999;
    double est_level = 0.95;
    ModelFlags est_flags;
    est->add_option("--input", input, "Panel CSV (or raw CSV with --raw)")->required();
    est->add_flag("--raw", raw, "Input is a raw location/date file; ingest it first");
    est->add_option("--estimator", estimator,
                    "did-cases, dr-cases, ipw-cases, ra-cases, std-did-y, reg-did-y or adj-did-y");
    est->add_option("--horizon", est_horizon, "Event times per group (0 = all available)")->check(CLI::NonNegativeNumber);
    est->add_option("--bootstrap-draws", est_draws, "Multiplier bootstrap draws")->check(CLI::Range(100, 1000000));
    est->add_option("--level", est_level, "Confidence level")->check(CLI::Range(0.5, 0.999));
    est->add_option("--group-window", group_window, "Days per adoption group (with --raw)")->check(CLI::PositiveNumber);
    est->add_option("--active-window", active_window, "Days of new cases counted as active (with --raw)")
        ->check(CLI::PositiveNumber);
    est->add_option("--anchor", est_anchor, "First group start date YYYY-MM-DD (with --raw)");
    est->add_option("--weighting", weighting, "Event-study group weights: count or population")
        ->check(CLI::IsMember({"count", "population"}));
    est->add_option("--out", est_out, "Output prefix");
    add_model_flags(est, est_flags);
    add_seed(est);

    // ingest
    auto* ing = app.add_subcommand("ingest", "Convert a raw location/date CSV into a panel CSV");
    std::string ing_in, ing_out = "panel.csv", anchor;
    bool no_normalize = false;
    int ing_active = 5, ing_group = 5;
    SchemaMapping mapping;
    ing->add_option("--input", ing_in, "Raw CSV")->required();
    ing->add_option("--out", ing_out, "Panel CSV path");
    ing->add_option("--active-window", ing_active, "Days of new cases counted as active")->check(CLI::PositiveNumber);
    ing->add_option("--group-window", ing_group, "Days per adoption group")->check(CLI::PositiveNumber);
    ing->add_option("--anchor", anchor, "First group start date YYYY-MM-DD (default: earliest adoption)");
    ing->add_flag("--no-normalize", no_normalize, "Keep raw counts instead of per-million values");
    ing->add_option("--col-location", mapping.location);
    ing->add_option("--col-date", mapping.date);
    ing->add_option("--col-cases", mapping.cum_cases);
    ing->add_option("--col-population", mapping.population);
    ing->add_option("--col-tests", mapping.cum_tests);
    ing->add_option("--col-outcome", mapping.outcome);
    ing->add_option("--col-region", mapping.region);
    ing->add_option("--col-policy", mapping.policy_date);

    // plot-script
    auto* plot = app.add_subcommand("plot-script", "Emit a matplotlib script for an event-study file");
    std::string plot_in = "estimates_event_study.csv", plot_img = "event_study.png", plot_out;
    plot->add_option("--input", plot_in, "Estimates CSV the script reads");
    plot->add_option("--image", plot_img, "Image the script writes");
    plot->add_option("--out", plot_out, "Script path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!simd_choice.empty()) {
            simd::Isa isa;
            if (simd_choice == "scalar") isa = simd::Isa::Scalar;
            else if (simd_choice == "avx2") isa = simd::Isa::Avx2;
            else if (simd_choice == "neon") isa = simd::Isa::Neon;
            else throw ParameterError("unknown --simd value '" + simd_choice + "'");
            simd::select(isa);
        }
        const std::uint64_t s = seed.value_or(default_seed());
        if (sim->parsed()) return cmd_simulate(config_path, seed, sim_out, paths_out);
        if (mc->parsed())
            return cmd_montecarlo(suite, reps, s, mc_out, mc_horizon, mc_estimators, mc_flags, draws, level, uniform,
                                  threads);
        if (est->parsed())
            return cmd_estimate(input, raw, estimator, est_flags, est_draws, est_level, est_horizon, group_window,
                                active_window, est_anchor, s, est_out, weighting);
        if (ing->parsed())
            return cmd_ingest(ing_in, ing_out, ing_active, ing_group, anchor, no_normalize, mapping);
        if (plot->parsed()) return cmd_plot_script(plot_in, plot_img, plot_out);
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
