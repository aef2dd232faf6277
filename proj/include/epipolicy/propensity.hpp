#pragma once

#include "epipolicy/features.hpp"
#include "epipolicy/linalg.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace epipolicy {

struct IrlsOptions {
    int max_iterations = 100;
    double tolerance = 1e-8;     // on the largest coefficient change
};

// Maximum-likelihood logistic regression by iteratively reweighted least
// squares. The first design column is expected to be the intercept.
struct LogitFit {
    std::vector<double> coef;
    std::vector<double> fitted;          // training probabilities, unclipped
    Matrix scaled_hessian_inverse;       // (X' W X / n)^{-1} at the estimate
    int iterations = 0;
    bool converged = false;
    bool separation = false;             // fitted probabilities pinned at 0 or 1
    double max_change = 0.0;
};

// Throws DegenerateDesignError when only one class is present or when there
// are no more observations than features.
LogitFit fit_logit(const Matrix& x, std::span<const std::uint8_t> y, const IrlsOptions& options = {});

double logistic(double eta) noexcept;

struct PropensityModel {
    FeatureMap features;
    LogitFit fit;

    std::vector<double> predict(const PreTreatmentState& state) const;
};

PropensityModel fit_propensity(const PreTreatmentState& state, std::span<const std::uint8_t> treated,
                               const FeatureSpec& spec, const IrlsOptions& options = {});

}  // namespace epipolicy
