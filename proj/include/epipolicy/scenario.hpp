#pragma once

// Multi-location data generating process: treatment assignment, first-case
// timing, SIRD paths and an economic outcome that loads on active cases.

#include "epipolicy/panel.hpp"
#include "epipolicy/rng.hpp"
#include "epipolicy/sird.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace epipolicy {

struct EconParams {
    double alpha = -0.1;                // outcome units per active case
    double tau_intercept = 50.0;        // tau_t = tau_intercept + tau_slope * t / T
    double tau_slope = 20.0;
    double xi_mean_treated = 10.0;
    double xi_mean_untreated = 20.0;
    double xi_sd = 1.0;
    double noise_sd = 1.0;
    double direct_effect = 0.0;         // added to treated outcomes from adoption on

    double tau(std::int64_t t, std::int64_t t_total) const noexcept {
        return tau_intercept + tau_slope * static_cast<double>(t) / static_cast<double>(t_total);
    }
    void validate() const;
};

struct ScenarioConfig {
    std::int64_t n_locations = 250;
    SirdParams sird{};
    std::int64_t t_total = 400;
    double treat_prob = 0.5;
    std::int64_t policy_time = 150;
    double post_policy_beta = 0.08;
    double lambda_d = 40.0;             // mean first-case period, treated
    double lambda_u = 80.0;             // mean first-case period, untreated
    std::int64_t initial_cases = 10;
    std::optional<EconParams> econ;
    std::uint64_t root_seed = 20200601;

    // Staggered adoption: location joins group adoption_dates[k] with
    // probability adoption_probs[k]; the remainder is never treated. Empty
    // means the single-date design (policy_time, treat_prob).
    std::vector<std::int64_t> adoption_dates;
    std::vector<double> adoption_probs;

    void validate() const;
    std::int64_t earliest_adoption() const;
};

// i.i.d. Bernoulli(treat_prob) flags.
std::vector<std::uint8_t> assign_treatment(const ScenarioConfig& config, Rng& rng);

// Poisson(lambda_d) for treated, Poisson(lambda_u) otherwise, clamped to
// [0, earliest_adoption - 1].
std::int64_t draw_first_case_time(bool treated, const ScenarioConfig& config, Rng& rng);

// Y_t = tau_t + xi + alpha * I_t + v_t with xi ~ N(xi_mean_d, xi_sd^2) and
// v_t ~ N(0, noise_sd^2). `adoption` switches on the direct effect.
std::vector<double> economic_outcome_path(std::span<const double> active_cases, bool treated,
                                          const EconParams& econ, Rng& rng,
                                          std::optional<std::int64_t> adoption = std::nullopt);

// Simulates every location from streams derived from config.root_seed. The
// returned panel carries seed-matched untreated paths for treated locations.
Panel build_panel(const ScenarioConfig& config);

// Flat "key = value" text. Unknown keys and malformed values raise
// ConfigError naming the key and line.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::string& path);
void write_config(std::ostream& out, const ScenarioConfig& config);

}  // namespace epipolicy
