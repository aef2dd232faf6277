#include "epipolicy/sird.hpp"

#include "epipolicy/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace epipolicy {

void SirdParams::validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ParameterError("beta must be a nonnegative finite rate");
    if (!(lambda >= 0.0)) throw ParameterError("lambda must be nonnegative");
    if (!(gamma >= 0.0)) throw ParameterError("gamma must be nonnegative");
    if (lambda + gamma > 1.0) throw ParameterError("lambda + gamma must not exceed 1");
    if (n < 1) throw ParameterError("population must be at least 1");
}

bool is_consistent(const SirdState& st, std::int64_t n) noexcept {
    return st.s >= 0 && st.i >= 0 && st.r >= 0 && st.d >= 0 && st.s + st.i + st.r + st.d == n &&
           st.c == n - st.s;
}

double expected_new_cases(const SirdState& state, const SirdParams& params) noexcept {
    return params.beta * (static_cast<double>(state.i) / static_cast<double>(params.n)) *
           static_cast<double>(state.s);
}

SirdState step(const SirdState& state, const SirdParams& params, Rng& rng) {
    params.validate();
    if (state.i == 0) return state;

    std::int64_t new_infections = 0;
    const double mean = expected_new_cases(state, params);
    if (mean > 0.0) {
        std::poisson_distribution<std::int64_t> poisson(mean);
        new_infections = std::min(poisson(rng), state.s);
    }

    // Multinomial(I; lambda, gamma, 1 - lambda - gamma) as a binomial chain.
    std::int64_t recoveries = 0;
    std::int64_t deaths = 0;
    if (params.lambda > 0.0) {
        std::binomial_distribution<std::int64_t> rec(state.i, std::min(params.lambda, 1.0));
        recoveries = rec(rng);
    }
    const std::int64_t remaining = state.i - recoveries;
    if (params.gamma > 0.0 && remaining > 0) {
        const double cond = params.lambda < 1.0 ? std::min(params.gamma / (1.0 - params.lambda), 1.0) : 0.0;
        std::binomial_distribution<std::int64_t> die(remaining, cond);
        deaths = die(rng);
    }

    SirdState next;
    next.s = state.s - new_infections;
    next.i = state.i + new_infections - recoveries - deaths;
    next.r = state.r + recoveries;
    next.d = state.d + deaths;
    next.c = state.c + new_infections;
    return next;
}

SirdPath simulate_path(const SirdParams& params, const PathOptions& opt, Rng& rng) {
    params.validate();
    if (opt.t_total < 1) throw ParameterError("a path needs at least one period");
    if (opt.first_case_time < 0 || opt.first_case_time >= opt.t_total)
        throw SeedingError("first case time must lie in [0, t_total)");
    if (opt.initial_cases < 0 || opt.initial_cases > params.n)
        throw SeedingError("initial cases (" + std::to_string(opt.initial_cases) +
                           ") exceed the population (" + std::to_string(params.n) + ")");

    SirdPath path;
    path.n = params.n;
    path.first_case_time = opt.first_case_time;
    path.states.reserve(static_cast<std::size_t>(opt.t_total));

    SirdState st{params.n, 0, 0, 0, 0};
    SirdParams active = params;
    for (std::int64_t t = 0; t < opt.t_total; ++t) {
        if (t == opt.first_case_time) {
            st.s -= opt.initial_cases;
            st.i += opt.initial_cases;
            st.c += opt.initial_cases;
        } else if (t > opt.first_case_time) {
            if (opt.policy_time && opt.post_policy_beta && t >= *opt.policy_time)
                active.beta = *opt.post_policy_beta;
            st = step(st, active, rng);
        }
        path.states.push_back(st);
    }
    return path;
}

void write_paths_csv(std::ostream& out, std::span<const SirdPath> paths) {
    out << "location_id,t,S,I,R,D,C\n";
    for (std::size_t l = 0; l < paths.size(); ++l) {
        const auto& p = paths[l];
        for (std::size_t t = 0; t < p.states.size(); ++t) {
            const auto& s = p.states[t];
            out << l << ',' << t << ',' << s.s << ',' << s.i << ',' << s.r << ',' << s.d << ',' << s.c << '\n';
        }
    }
}

}  // namespace epipolicy
