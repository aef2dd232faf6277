#pragma once

// Stochastic SIRD transition system for one location.
//
// New infections in a period are Poisson with mean beta * I * S / N (clamped
// to the available susceptibles); the currently infected split into
// recoveries, deaths and continuing infections by a multinomial draw with
// probabilities (lambda, gamma, 1 - lambda - gamma).

#include "epipolicy/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace epipolicy {

struct SirdState {
    std::int64_t s = 0;
    std::int64_t i = 0;
    std::int64_t r = 0;
    std::int64_t d = 0;
    std::int64_t c = 0;

    bool operator==(const SirdState&) const = default;
};

struct SirdParams {
    double beta = 0.08;
    double lambda = 0.04;
    double gamma = 0.003;
    std::int64_t n = 1000;

    // Throws ParameterError when any invariant (rates nonnegative,
    // lambda + gamma <= 1, n >= 1) fails.
    void validate() const;
};

// True when s+i+r+d == n, c == n-s and every count is nonnegative.
bool is_consistent(const SirdState& state, std::int64_t n) noexcept;

struct SirdPath {
    std::vector<SirdState> states;   // one per period, t = 0 .. T-1
    std::int64_t first_case_time = 0;
    std::int64_t n = 0;

    std::size_t periods() const noexcept { return states.size(); }
};

struct PathOptions {
    std::int64_t t_total = 400;
    std::int64_t first_case_time = 0;
    std::int64_t initial_cases = 10;
    // From policy_time onward (the transition into that period included) the
    // infection rate becomes post_policy_beta.
    std::optional<std::int64_t> policy_time;
    std::optional<double> post_policy_beta;
};

// Expected new cases beta * (I / N) * S.
double expected_new_cases(const SirdState& state, const SirdParams& params) noexcept;

// One stochastic transition. A state with no infected is absorbing and
// consumes no random numbers.
SirdState step(const SirdState& state, const SirdParams& params, Rng& rng);

SirdPath simulate_path(const SirdParams& params, const PathOptions& options, Rng& rng);

// Long-format export: location_id,t,S,I,R,D,C
void write_paths_csv(std::ostream& out, std::span<const SirdPath> paths);

}  // namespace epipolicy
