#include "epipolicy/features.hpp"

#include "epipolicy/error.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace epipolicy {

namespace {

// Exponent vectors of total degree `deg` over n variables, lexicographically
// descending in the first variable.
void exponents_of_degree(std::size_t n, int deg, std::vector<int>& cur, std::size_t pos,
                         std::vector<std::vector<int>>& out) {
    if (pos + 1 == n) {
        cur[pos] = deg;
        out.push_back(cur);
        return;
    }
    for (int e = deg; e >= 0; --e) {
        cur[pos] = e;
        exponents_of_degree(n, deg - e, cur, pos + 1, out);
    }
}

std::vector<std::vector<int>> monomial_exponents(std::size_t n, int degree, bool interactions) {
    std::vector<std::vector<int>> out;
    out.emplace_back(n, 0);
    if (n == 0) return out;
    for (int d = 1; d <= degree; ++d) {
        if (interactions) {
            std::vector<int> cur(n, 0);
            exponents_of_degree(n, d, cur, 0, out);
        } else {
            for (std::size_t v = 0; v < n; ++v) {
                std::vector<int> e(n, 0);
                e[v] = d;
                out.push_back(std::move(e));
            }
        }
    }
    return out;
}

double monomial(std::span<const double> vars, const std::vector<int>& exps) {
    double v = 1.0;
    for (std::size_t k = 0; k < exps.size(); ++k)
        for (int p = 0; p < exps[k]; ++p) v *= vars[k];
    return v;
}

}  // namespace

std::vector<double> polynomial_features(std::span<const double> vars, int degree, bool include_interactions) {
    if (degree < 0) throw ParameterError("polynomial degree must be nonnegative");
    const auto exps = monomial_exponents(vars.size(), degree, include_interactions);
    std::vector<double> out;
    out.reserve(exps.size());
    for (const auto& e : exps) out.push_back(monomial(vars, e));
    return out;
}

std::size_t polynomial_feature_count(std::size_t n_vars, int degree, bool include_interactions) {
    return monomial_exponents(n_vars, degree, include_interactions).size();
}

PreTreatmentState pre_treatment_state(const Panel& panel, const Cohort& cohort,
                                      const std::vector<std::string>& covariates) {
    PreTreatmentState st;
    st.i_pre = level(panel, cohort, Var::I, cohort.base_period);
    st.s_pre = level(panel, cohort, Var::S, cohort.base_period);
    for (const auto& name : covariates) {
        const auto k = panel.covariate_index(name);
        if (!k) throw SchemaError("panel has no covariate named '" + name + "'");
        std::vector<double> col(cohort.size());
        for (std::size_t u = 0; u < cohort.size(); ++u)
            col[u] = panel.covariate(*k, cohort.units[u], static_cast<std::size_t>(cohort.base_period));
        st.extra_names.push_back(name);
        st.extra.push_back(std::move(col));
    }
    return st;
}

std::vector<std::vector<double>> FeatureMap::base_columns(const PreTreatmentState& state) const {
    std::vector<std::vector<double>> cols;
    if (spec_.use_infected) cols.push_back(state.i_pre);
    if (spec_.use_susceptible) cols.push_back(state.s_pre);
    for (const auto& name : spec_.covariates) {
        bool found = false;
        for (std::size_t k = 0; k < state.extra_names.size(); ++k)
            if (state.extra_names[k] == name) {
                cols.push_back(state.extra[k]);
                found = true;
            }
        if (!found) throw SchemaError("pre-treatment state lacks covariate '" + name + "'");
    }
    return cols;
}

FeatureMap FeatureMap::fit(const PreTreatmentState& state, const FeatureSpec& spec) {
    FeatureMap map;
    map.spec_ = spec;
    map.n_poly_ = (spec.use_infected ? 1 : 0) + (spec.use_susceptible ? 1 : 0);
    const auto cols = map.base_columns(state);
    map.center_.assign(cols.size(), 0.0);
    map.scale_.assign(cols.size(), 1.0);
    if (spec.standardize && state.size() > 1) {
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const double n = static_cast<double>(cols[k].size());
            const double mean = std::accumulate(cols[k].begin(), cols[k].end(), 0.0) / n;
            double ss = 0.0;
            for (double x : cols[k]) ss += (x - mean) * (x - mean);
            const double sd = std::sqrt(ss / n);
            map.center_[k] = mean;
            map.scale_[k] = sd > 0.0 ? sd : 1.0;
        }
    }
    return map;
}

std::size_t FeatureMap::width() const noexcept {
    return polynomial_feature_count(n_poly_, spec_.degree, spec_.interactions) +
           (spec_.degree > 0 ? spec_.covariates.size() : 0);
}

Matrix FeatureMap::design(const PreTreatmentState& state) const {
    auto cols = base_columns(state);
    for (std::size_t k = 0; k < cols.size(); ++k)
        for (double& x : cols[k]) x = (x - center_[k]) / scale_[k];

    const std::size_t n = state.size();
    Matrix x(n, width());
    std::vector<double> vars(n_poly_);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = 0; k < n_poly_; ++k) vars[k] = cols[k][r];
        const auto poly = polynomial_features(vars, spec_.degree, spec_.interactions);
        std::size_t c = 0;
        for (double v : poly) x(r, c++) = v;
        if (spec_.degree > 0)
            for (std::size_t k = n_poly_; k < cols.size(); ++k) x(r, c++) = cols[k][r];
    }
    return x;
}

}  // namespace epipolicy
