#include "epipolicy/montecarlo.hpp"

#include "epipolicy/csv.hpp"
#include "epipolicy/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace epipolicy {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<ReplicationOutcome> run_replication(const ScenarioConfig& base, std::uint64_t rep_seed,
                                                const McOptions& options) {
    ScenarioConfig cfg = base;
    cfg.root_seed = rep_seed;
    std::vector<ReplicationOutcome> out(options.estimators.size());
    Panel panel;
    try {
        panel = build_panel(cfg);
    } catch (const Error& e) {
        for (auto& o : out) o.error = std::string("simulation: ") + e.what();
        return out;
    }
    for (std::size_t k = 0; k < options.estimators.size(); ++k) {
        auto& o = out[k];
        const EstimatorKind kind = options.estimators[k];
        try {
            GridOptions go = options.grid;
            go.estimator = kind;
            go.horizon = options.horizon;
            const auto grid = group_time_att(panel, go);
            auto es = event_study(grid);
            const auto truth_path = true_effect_path(panel, kind, options.horizon);
            Rng boot = make_stream(rep_seed, StreamTag::Bootstrap, k);
            const auto overall = overall_att(es, options.horizon, options.bootstrap, boot);
            o.estimate = overall.estimate;
            o.se = overall.se;
            o.truth = std::accumulate(truth_path.begin(), truth_path.end(), 0.0) /
                      static_cast<double>(truth_path.size());
            if (options.uniform_test) {
                attach_inference(es, options.bootstrap, boot);
                for (const auto& p : es.points)
                    if (p.index < options.horizon) {
                        const double tr = truth_path[static_cast<std::size_t>(p.index)];
                        if (tr < p.band_lo || tr > p.band_hi) o.reject = true;
                    }
            } else {
                o.reject = overall.p_value < 0.05;
            }
            o.ok = std::isfinite(o.estimate) && std::isfinite(o.se);
            if (!o.ok) o.error = "non-finite estimate";
        } catch (const Error& e) {
            o.ok = false;
            o.error = e.what();
        }
    }
    return out;
}

}  // namespace

const McRow& McReport::find(const std::string& scenario, EstimatorKind k) const {
    for (const auto& r : rows)
        if (r.scenario == scenario && r.estimator == k) return r;
    throw ParameterError("no report row for " + scenario + " / " + estimator_name(k));
}

std::vector<double> true_effect_path(const Panel& panel, EstimatorKind estimator, int horizon) {
    const auto& cf = panel.counterfactual();
    if (!cf) throw ParameterError("panel carries no untreated potential paths");
    const bool y = uses_outcome_y(estimator);
    if (y && cf->y0.empty()) throw ParameterError("panel carries no untreated outcome path");
    const std::size_t T = panel.periods();
    std::vector<double> path(static_cast<std::size_t>(horizon), 0.0);
    std::vector<double> count(static_cast<std::size_t>(horizon), 0.0);
    for (std::size_t l = 0; l < panel.locations(); ++l) {
        const auto g = panel.group(l);
        if (!g) continue;
        for (int e = 0; e < horizon; ++e) {
            const std::size_t t = static_cast<std::size_t>(*g + e);
            if (t >= T) break;
            const double obs = panel.at(y ? Var::Y : Var::C, l, t);
            const double base = y ? cf->y0[l * T + t] : cf->c0[l * T + t];
            path[static_cast<std::size_t>(e)] += obs - base;
            count[static_cast<std::size_t>(e)] += 1.0;
        }
    }
    for (std::size_t e = 0; e < path.size(); ++e)
        if (count[e] > 0.0) path[e] /= count[e];
    return path;
}

void summarize(McRow& row, std::uint64_t seed) {
    std::vector<double> err;
    std::vector<double> rej;
    row.failures = 0;
    row.failure_messages.clear();
    double truth = 0.0;
    for (const auto& o : row.outcomes) {
        if (!o.ok) {
            ++row.failures;
            if (row.failure_messages.size() < 5) row.failure_messages.push_back(o.error);
            continue;
        }
        err.push_back(o.estimate - o.truth);
        rej.push_back(o.reject ? 1.0 : 0.0);
        truth += o.truth;
    }
    const std::size_t R = err.size();
    row.reps = static_cast<int>(R);
    if (R == 0) return;
    const double r = static_cast<double>(R);
    row.mean_truth = truth / r;
    row.bias = std::accumulate(err.begin(), err.end(), 0.0) / r;
    double ss = 0.0, mse = 0.0;
    for (double e : err) {
        ss += (e - row.bias) * (e - row.bias);
        mse += e * e;
    }
    mse /= r;
    const double sd = R > 1 ? std::sqrt(ss / (r - 1.0)) : 0.0;
    row.bias_se = sd / std::sqrt(r);
    row.rmse = std::sqrt(mse);
    double ss2 = 0.0;
    for (double e : err) ss2 += (e * e - mse) * (e * e - mse);
    const double mse_se = R > 1 ? std::sqrt(ss2 / (r - 1.0) / r) : 0.0;
    row.rmse_se = row.rmse > 0.0 ? mse_se / (2.0 * row.rmse) : 0.0;

    std::vector<double> abs_err(R);
    for (std::size_t i = 0; i < R; ++i) abs_err[i] = std::abs(err[i]);
    row.mad = median(abs_err);
    // Resampling error of the median over replications.
    Rng rng = make_stream(seed, StreamTag::Auxiliary);
    std::uniform_int_distribution<std::size_t> pick(0, R - 1);
    constexpr int kResamples = 200;
    std::vector<double> meds(kResamples);
    std::vector<double> tmp(R);
    for (int b = 0; b < kResamples; ++b) {
        for (std::size_t i = 0; i < R; ++i) tmp[i] = abs_err[pick(rng)];
        meds[static_cast<std::size_t>(b)] = median(tmp);
    }
    const double mm = std::accumulate(meds.begin(), meds.end(), 0.0) / kResamples;
    double sm = 0.0;
    for (double m : meds) sm += (m - mm) * (m - mm);
    row.mad_se = std::sqrt(sm / (kResamples - 1));

    row.rejection = std::accumulate(rej.begin(), rej.end(), 0.0) / r;
    row.rejection_se = std::sqrt(row.rejection * (1.0 - row.rejection) / r);
}

McReport run_scenario(const ScenarioConfig& config, const std::string& label, const McOptions& options) {
    config.validate();
    if (options.reps < 2) throw ParameterError("Monte Carlo needs at least 2 replications");
    if (options.horizon < 1) throw ParameterError("horizon must be at least 1");
    if (options.estimators.empty()) throw ParameterError("no estimators requested");
    for (auto k : options.estimators)
        if (uses_outcome_y(k) && !config.econ)
            throw ParameterError(std::string(estimator_name(k)) + " needs a scenario with an economic outcome");

    const auto R = static_cast<std::size_t>(options.reps);
    std::vector<std::vector<ReplicationOutcome>> results(R);
    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, R));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < R; r = next++)
            results[r] = run_replication(config, derive_seed(options.root_seed, StreamTag::Replication, r), options);
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    McReport report;
    for (std::size_t k = 0; k < options.estimators.size(); ++k) {
        McRow row;
        row.scenario = label;
        row.config = config;
        row.estimator = options.estimators[k];
        row.outcomes.reserve(R);
        for (std::size_t r = 0; r < R; ++r) row.outcomes.push_back(results[r][k]);
        summarize(row, derive_seed(options.root_seed, StreamTag::Auxiliary, k));
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::vector<SuiteRow> cases_suite_rows() {
    struct Spec {
        std::int64_t policy;
        double ld, lu;
        std::int64_t n;
    };
    const Spec specs[] = {{150, 40, 60, 250}, {150, 60, 60, 250}, {150, 80, 60, 250}, {75, 40, 80, 250},
                          {150, 40, 80, 250}, {225, 40, 80, 250}, {150, 40, 80, 1000}};
    std::vector<SuiteRow> rows;
    for (const auto& s : specs) {
        SuiteRow r;
        r.config.policy_time = s.policy;
        r.config.lambda_d = s.ld;
        r.config.lambda_u = s.lu;
        r.config.n_locations = s.n;
        std::ostringstream label;
        label << "policy=" << s.policy << " lambda_d=" << s.ld << " lambda_u=" << s.lu << " n=" << s.n;
        r.label = label.str();
        rows.push_back(r);
    }
    return rows;
}

std::vector<SuiteRow> econ_suite_rows() {
    std::vector<SuiteRow> rows;
    for (std::int64_t n : {250, 1000})
        for (double ld : {40.0, 60.0, 80.0}) {
            SuiteRow r;
            r.config.policy_time = 150;
            r.config.lambda_d = ld;
            r.config.lambda_u = 60;
            r.config.n_locations = n;
            r.config.econ = EconParams{};
            std::ostringstream label;
            label << "policy=150 lambda_d=" << ld << " lambda_u=60 n=" << n;
            r.label = label.str();
            rows.push_back(r);
        }
    return rows;
}

Suite parse_suite(const std::string& name) {
    if (name == "cases") return Suite::Cases;
    if (name == "econ") return Suite::Econ;
    throw ParameterError("unknown suite '" + name + "' (expected cases or econ)");
}

McReport table_suite(Suite which, const McOptions& options) {
    McOptions opt = options;
    if (which == Suite::Cases) {
        bool custom = false;
        for (auto k : opt.estimators) custom = custom || uses_outcome_y(k);
        if (custom) throw ParameterError("cases suite takes case estimators only");
    } else {
        bool cases_only = true;
        for (auto k : opt.estimators) cases_only = cases_only && !uses_outcome_y(k);
        if (cases_only)
            opt.estimators = {EstimatorKind::AdjDidY, EstimatorKind::StdDidY, EstimatorKind::RegDidY};
    }
    const auto rows = which == Suite::Cases ? cases_suite_rows() : econ_suite_rows();
    McReport report;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        McOptions row_opt = opt;
        row_opt.root_seed = derive_seed(options.root_seed, StreamTag::Auxiliary, 1000 + i);
        auto part = run_scenario(rows[i].config, rows[i].label, row_opt);
        for (auto& r : part.rows) report.rows.push_back(std::move(r));
    }
    return report;
}

void write_report_csv(std::ostream& out, const McReport& report) {
    out << "scenario,policy_time,lambda_d,lambda_u,n,estimator,reps,failures,bias,bias_se,rmse,rmse_se,mad,mad_se,"
           "rejection,rejection_se\n";
    for (const auto& r : report.rows) {
        out << '"' << r.scenario << "\"," << r.config.policy_time << ',' << csv::format_number(r.config.lambda_d) << ','
            << csv::format_number(r.config.lambda_u) << ',' << r.config.n_locations << ','
            << estimator_name(r.estimator) << ',' << r.reps << ',' << r.failures;
        for (double v : {r.bias, r.bias_se, r.rmse, r.rmse_se, r.mad, r.mad_se, r.rejection, r.rejection_se})
            out << ',' << csv::format_number(v);
        out << '\n';
    }
}

void write_report_text(std::ostream& out, const McReport& report) {
    const auto flags = out.flags();
    out << std::left << std::setw(7) << "policy" << std::setw(9) << "lambda_d" << std::setw(9) << "lambda_u"
        << std::setw(6) << "n" << std::setw(11) << "estimator" << std::right << std::setw(9) << "bias"
        << std::setw(9) << "(se)" << std::setw(9) << "rmse" << std::setw(9) << "mad" << std::setw(9) << "rej"
        << std::setw(6) << "R" << std::setw(6) << "fail" << '\n';
    out << std::fixed << std::setprecision(3);
    for (const auto& r : report.rows) {
        out << std::left << std::setw(7) << r.config.policy_time << std::setw(9) << std::setprecision(0)
            << r.config.lambda_d << std::setw(9) << r.config.lambda_u << std::setw(6) << r.config.n_locations
            << std::setw(11) << estimator_name(r.estimator) << std::right << std::setprecision(3) << std::setw(9)
            << r.bias << std::setw(9) << r.bias_se << std::setw(9) << r.rmse << std::setw(9) << r.mad
            << std::setw(9) << r.rejection << std::setw(6) << r.reps << std::setw(6) << r.failures << '\n';
        for (const auto& m : r.failure_messages) out << "    failure: " << m << '\n';
    }
    out.flags(flags);
}

}  // namespace epipolicy
