#include "epipolicy/cohort.hpp"

#include "epipolicy/error.hpp"

#include <string>

namespace epipolicy {

std::size_t Cohort::n_treated() const noexcept {
    std::size_t k = 0;
    for (auto d : treated) k += d ? 1 : 0;
    return k;
}

Cohort single_date_cohort(const Panel& panel, int policy_time) {
    if (policy_time < 1 || static_cast<std::size_t>(policy_time) > panel.periods())
        throw ParameterError("policy time " + std::to_string(policy_time) + " is outside the panel");
    Cohort c;
    c.base_period = policy_time - 1;
    for (std::size_t l = 0; l < panel.locations(); ++l) {
        const auto g = panel.group(l);
        if (!g || *g == policy_time) {
            c.units.push_back(l);
            c.treated.push_back(g ? 1 : 0);
        }
    }
    return c;
}

namespace {

void check_period(const Panel& panel, int t) {
    if (t < 0 || static_cast<std::size_t>(t) >= panel.periods())
        throw ParameterError("period " + std::to_string(t) + " is outside the panel");
}

}  // namespace

std::vector<double> long_difference(const Panel& panel, const Cohort& cohort, Var v, int t) {
    check_period(panel, t);
    check_period(panel, cohort.base_period);
    std::vector<double> out(cohort.size());
    for (std::size_t k = 0; k < cohort.size(); ++k)
        out[k] = panel.at(v, cohort.units[k], static_cast<std::size_t>(t)) -
                 panel.at(v, cohort.units[k], static_cast<std::size_t>(cohort.base_period));
    return out;
}

std::vector<double> level(const Panel& panel, const Cohort& cohort, Var v, int t) {
    check_period(panel, t);
    std::vector<double> out(cohort.size());
    for (std::size_t k = 0; k < cohort.size(); ++k) out[k] = panel.at(v, cohort.units[k], static_cast<std::size_t>(t));
    return out;
}

}  // namespace epipolicy
