#pragma once

// Group-time effects under staggered adoption and their event-study and
// overall summaries.

#include "epipolicy/case_estimators.hpp"
#include "epipolicy/econ_estimators.hpp"
#include "epipolicy/inference.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace epipolicy {

enum class EstimatorKind { DidCases, DrCases, IpwCases, RaCases, StdDidY, RegDidY, AdjDidY };

// CLI spelling: did-cases, dr-cases, ipw-cases, ra-cases, std-did-y, reg-did-y, adj-did-y.
const char* estimator_name(EstimatorKind k) noexcept;
EstimatorKind parse_estimator(const std::string& name);
bool uses_outcome_y(EstimatorKind k) noexcept;
bool uses_propensity(EstimatorKind k) noexcept;

enum class Comparison { NeverAndNotYet, NeverOnly };
enum class GroupWeighting { Count, Population };

struct GridOptions {
    EstimatorKind estimator = EstimatorKind::DrCases;
    CaseModelSpec model{};
    Comparison comparison = Comparison::NeverAndNotYet;
    std::optional<double> trim_cap = 0.95;  // per cell, propensity-based estimators only; nullopt disables
    bool symmetric_trim = false;
    int horizon = 0;                     // event times 0..horizon-1; 0 = all available
    bool pooled_alpha = false;           // requires Comparison::NeverOnly
};

struct GridCell {
    int g = 0;
    int t = 0;
    bool missing = false;
    std::string reason;                  // why a cell is missing
    double estimate = 0.0;
    std::vector<double> influence;       // over all panel locations
    std::size_t n_treated = 0;
    std::size_t n_untreated = 0;
    std::size_t n_dropped = 0;
    std::vector<std::string> dropped_ids;
    // Econ diagnostics, when applicable.
    double alpha = 0.0;
    double tau_tilde = 0.0;
    double att_i = 0.0;
    bool separation = false;
    bool clipped = false;
};

struct GroupTimeGrid {
    std::size_t n_locations = 0;
    std::vector<int> groups;
    std::map<int, std::size_t> group_size;     // treated locations per group
    std::map<int, double> group_mass;          // summed population per group
    std::vector<int> location_group;           // 0 for never treated
    std::vector<double> location_population;
    std::vector<GridCell> cells;

    const GridCell* find(int g, int t) const;
};

GroupTimeGrid group_time_att(const Panel& panel, const GridOptions& options);

// Weighted average of ATT(g, g+e) over groups observed at each e, weights
// from group shares with their estimation effect in the influence function.
AttSeries event_study(const GroupTimeGrid& grid, GroupWeighting weighting = GroupWeighting::Count);

struct OverallAtt {
    double estimate = 0.0;
    double se = 0.0;
    double p_value = 1.0;
    int horizon = 0;
    std::vector<double> influence;
};

// Unweighted mean over e = 0..horizon-1 with a bootstrap SE.
OverallAtt overall_att(const AttSeries& es, int horizon, const BootstrapOptions& options, Rng& rng);

// g,t,estimate,se,band_lo,band_hi,n_treated,n_untreated,n_dropped
// Cell SEs come from a bootstrap of the grid influence functions.
void write_grid_csv(std::ostream& out, const GroupTimeGrid& grid, const BootstrapOptions& options, Rng& rng);

}  // namespace epipolicy
