#pragma once

#include "epipolicy/panel.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace epipolicy {

// The analysis sample for one adoption date: which panel locations take
// part, which of them are treated, and the conditioning period (one before
// adoption) whose state drives the propensity score and outcome models.
struct Cohort {
    int base_period = 0;
    std::vector<std::size_t> units;       // panel location indices
    std::vector<std::uint8_t> treated;    // aligned with units

    std::size_t size() const noexcept { return units.size(); }
    std::size_t n_treated() const noexcept;
    std::size_t n_untreated() const noexcept { return size() - n_treated(); }
};

// Locations adopting at `policy_time` against never-treated locations.
Cohort single_date_cohort(const Panel& panel, int policy_time);

// X_t - X_{base} for every cohort unit.
std::vector<double> long_difference(const Panel& panel, const Cohort& cohort, Var v, int t);
// X_t for every cohort unit.
std::vector<double> level(const Panel& panel, const Cohort& cohort, Var v, int t);

// A point estimate with its influence function over the cohort units:
// estimate - truth ~= mean(influence).
struct Estimate {
    double value = 0.0;
    std::vector<double> influence;
};

}  // namespace epipolicy
