#include "epipolicy/propensity.hpp"

#include "epipolicy/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace epipolicy {

namespace {

constexpr double kEtaBound = 35.0;
constexpr double kMinWeight = 1e-12;
constexpr double kSeparationEps = 1e-8;

double deviance(std::span<const double> p, std::span<const std::uint8_t> y) {
    double dev = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = y[i] ? p[i] : 1.0 - p[i];
        dev -= 2.0 * std::log(std::max(q, 1e-300));
    }
    return dev;
}

std::vector<double> probabilities(const Matrix& x, std::span<const double> beta) {
    auto eta = x.multiply(beta);
    for (double& e : eta) e = logistic(e);
    return eta;
}

}  // namespace

double logistic(double eta) noexcept {
    eta = std::clamp(eta, -kEtaBound, kEtaBound);
    return 1.0 / (1.0 + std::exp(-eta));
}

LogitFit fit_logit(const Matrix& x, std::span<const std::uint8_t> y, const IrlsOptions& options) {
    const std::size_t n = x.rows();
    const std::size_t k = x.cols();
    if (y.size() != n) throw ParameterError("logit: response length does not match design rows");
    std::size_t ones = 0;
    for (auto v : y) ones += v ? 1 : 0;
    if (ones == 0 || ones == n)
        throw DegenerateDesignError("propensity score needs both treated and untreated units (treated " +
                                    std::to_string(ones) + " of " + std::to_string(n) + ")");
    if (n <= k)
        throw DegenerateDesignError("propensity score has " + std::to_string(n) + " observations for " +
                                    std::to_string(k) + " features");

    LogitFit fit;
    fit.coef.assign(k, 0.0);
    const double share = static_cast<double>(ones) / static_cast<double>(n);
    fit.coef[0] = std::log(share / (1.0 - share));

    std::vector<double> p = probabilities(x, fit.coef);
    double dev = deviance(p, y);
    std::vector<double> sw(n);
    std::vector<double> z(n);
    for (int it = 1; it <= options.max_iterations; ++it) {
        const auto eta = x.multiply(fit.coef);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = std::max(p[i] * (1.0 - p[i]), kMinWeight);
            sw[i] = std::sqrt(w);
            z[i] = sw[i] * (eta[i] + (static_cast<double>(y[i]) - p[i]) / w);
        }
        const LeastSquares wls(x.scale_rows(sw));
        auto next = wls.solve(z);

        // Step halving keeps the deviance from increasing.
        std::vector<double> trial = next;
        auto p_trial = probabilities(x, trial);
        double dev_trial = deviance(p_trial, y);
        for (int h = 0; h < 20 && dev_trial > dev * (1.0 + 1e-12) + 1e-12; ++h) {
            for (std::size_t j = 0; j < k; ++j) trial[j] = 0.5 * (trial[j] + fit.coef[j]);
            p_trial = probabilities(x, trial);
            dev_trial = deviance(p_trial, y);
        }

        double change = 0.0;
        for (std::size_t j = 0; j < k; ++j) change = std::max(change, std::abs(trial[j] - fit.coef[j]));
        fit.coef = std::move(trial);
        p = std::move(p_trial);
        dev = dev_trial;
        fit.iterations = it;
        fit.max_change = change;
        if (change < options.tolerance) {
            fit.converged = true;
            break;
        }
    }

    fit.fitted = p;
    for (double q : p)
        if (q < kSeparationEps || q > 1.0 - kSeparationEps) fit.separation = true;

    for (std::size_t i = 0; i < n; ++i) sw[i] = std::sqrt(std::max(p[i] * (1.0 - p[i]), kMinWeight));
    const LeastSquares info(x.scale_rows(sw));
    fit.scaled_hessian_inverse = info.gram_inverse();
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) fit.scaled_hessian_inverse(a, b) *= static_cast<double>(n);
    return fit;
}

std::vector<double> PropensityModel::predict(const PreTreatmentState& state) const {
    return probabilities(features.design(state), fit.coef);
}

PropensityModel fit_propensity(const PreTreatmentState& state, std::span<const std::uint8_t> treated,
                               const FeatureSpec& spec, const IrlsOptions& options) {
    PropensityModel model;
    model.features = FeatureMap::fit(state, spec);
    model.fit = fit_logit(model.features.design(state), treated, options);
    return model;
}

}  // namespace epipolicy
