#pragma once

// Replication harness: simulate panels, run estimators, summarize bias,
// RMSE, median absolute deviation and rejection rates with MC errors.

#include "epipolicy/aggregation.hpp"
#include "epipolicy/scenario.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace epipolicy {

struct McOptions {
    int reps = 200;
    int horizon = 50;                       // event times averaged into the overall effect
    std::vector<EstimatorKind> estimators{EstimatorKind::DrCases, EstimatorKind::DidCases};
    GridOptions grid{};                     // estimator field is overridden per estimator
    BootstrapOptions bootstrap{};
    bool uniform_test = false;              // reject when the uniform band misses the truth path
    unsigned threads = 0;                   // 0 = hardware concurrency
    std::uint64_t root_seed = 20200601;
};

struct ReplicationOutcome {
    bool ok = false;
    std::string error;
    double estimate = 0.0;
    double se = 0.0;
    double truth = 0.0;
    bool reject = false;
};

struct McRow {
    std::string scenario;
    ScenarioConfig config;
    EstimatorKind estimator = EstimatorKind::DrCases;
    int reps = 0;                           // successful replications
    int failures = 0;
    std::vector<std::string> failure_messages;
    double bias = 0.0, bias_se = 0.0;
    double rmse = 0.0, rmse_se = 0.0;
    double mad = 0.0, mad_se = 0.0;
    double rejection = 0.0, rejection_se = 0.0;
    double mean_truth = 0.0;
    std::vector<ReplicationOutcome> outcomes;
};

struct McReport {
    std::vector<McRow> rows;

    const McRow& find(const std::string& scenario, EstimatorKind k) const;
};

// True event-time path of the chosen outcome for the treated, from the
// panel's seed-matched untreated paths, averaged with group-count weights.
std::vector<double> true_effect_path(const Panel& panel, EstimatorKind estimator, int horizon);

McReport run_scenario(const ScenarioConfig& config, const std::string& label, const McOptions& options);

struct SuiteRow {
    std::string label;
    ScenarioConfig config;
};
std::vector<SuiteRow> cases_suite_rows();
std::vector<SuiteRow> econ_suite_rows();

enum class Suite { Cases, Econ };
Suite parse_suite(const std::string& name);

McReport table_suite(Suite which, const McOptions& options);

void write_report_csv(std::ostream& out, const McReport& report);
void write_report_text(std::ostream& out, const McReport& report);

// Summary of a vector of replication outcomes.
void summarize(McRow& row, std::uint64_t seed);

}  // namespace epipolicy
