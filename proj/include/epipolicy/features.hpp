#pragma once

// Feature expansions of the pre-treatment epidemic state used by the
// propensity score and outcome regressions.

#include "epipolicy/cohort.hpp"
#include "epipolicy/linalg.hpp"

#include <span>
#include <string>
#include <vector>

namespace epipolicy {

// All monomials of `vars` up to total degree `degree`, intercept first,
// ordered by degree and then lexicographically by exponent (earlier
// variables first). Without interactions only pure powers appear.
//   (2, 3), degree 2, interactions -> [1, 2, 3, 4, 6, 9]
std::vector<double> polynomial_features(std::span<const double> vars, int degree, bool include_interactions);
std::size_t polynomial_feature_count(std::size_t n_vars, int degree, bool include_interactions);

struct FeatureSpec {
    int degree = 3;
    bool interactions = true;
    bool use_infected = true;       // I at the conditioning period
    bool use_susceptible = true;    // S at the conditioning period
    // Panel covariates (at the conditioning period) entering additively.
    std::vector<std::string> covariates;
    bool standardize = true;
    // Degree 0 means intercept only.
    static FeatureSpec intercept_only() {
        FeatureSpec f;
        f.degree = 0;
        return f;
    }
};

struct PreTreatmentState {
    std::vector<double> i_pre;
    std::vector<double> s_pre;
    std::vector<std::string> extra_names;
    std::vector<std::vector<double>> extra;   // extra[k][unit]

    std::size_t size() const noexcept { return i_pre.size(); }
};

PreTreatmentState pre_treatment_state(const Panel& panel, const Cohort& cohort,
                                      const std::vector<std::string>& covariates = {});

// A FeatureSpec plus the centering and scaling learned from a sample, so the
// same expansion can be reproduced on other data.
class FeatureMap {
public:
    FeatureMap() = default;
    static FeatureMap fit(const PreTreatmentState& state, const FeatureSpec& spec);

    Matrix design(const PreTreatmentState& state) const;
    std::size_t width() const noexcept;
    const FeatureSpec& spec() const noexcept { return spec_; }

private:
    std::vector<std::vector<double>> base_columns(const PreTreatmentState& state) const;

    FeatureSpec spec_;
    std::size_t n_poly_ = 0;
    std::vector<double> center_;
    std::vector<double> scale_;
};

}  // namespace epipolicy
