#include "epipolicy/econ_estimators.hpp"

#include "epipolicy/csv.hpp"
#include "epipolicy/error.hpp"
#include "epipolicy/linalg.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace epipolicy {

namespace {

struct TreatedMean {
    double value = 0.0;
    std::vector<double> influence;
};

TreatedMean treated_mean(std::span<const double> y, std::span<const std::uint8_t> treated) {
    const std::size_t n = y.size();
    double s = 0.0, n1 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (treated[i]) {
            s += y[i];
            n1 += 1.0;
        }
    if (n1 == 0.0) throw DegenerateDesignError("no treated units");
    TreatedMean m;
    m.value = s / n1;
    m.influence.assign(n, 0.0);
    const double scale = static_cast<double>(n) / n1;
    for (std::size_t i = 0; i < n; ++i)
        if (treated[i]) m.influence[i] = scale * (y[i] - m.value);
    return m;
}

void check_untreated(const Cohort& cohort) {
    if (cohort.n_untreated() < 3)
        throw CollinearityError("tau/alpha regression needs at least 3 untreated units, have " +
                                std::to_string(cohort.n_untreated()));
}

}  // namespace

const EconPeriodFit& EconFit::at(int t) const {
    for (const auto& p : periods)
        if (p.t == t) return p;
    throw ParameterError("no economic fit for period " + std::to_string(t));
}

EconPeriodFit fit_tau_alpha(const Panel& panel, const Cohort& cohort, int t) {
    check_untreated(cohort);
    const auto dy = long_difference(panel, cohort, Var::Y, t);
    const auto di = long_difference(panel, cohort, Var::I, t);
    const std::size_t n = cohort.size();

    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
        if (!cohort.treated[i]) idx.push_back(i);
    const std::size_t nu = idx.size();
    double mi = 0.0;
    for (auto i : idx) mi += di[i];
    mi /= static_cast<double>(nu);
    double var = 0.0;
    for (auto i : idx) var += (di[i] - mi) * (di[i] - mi);
    if (!(var > 1e-12 * (1.0 + mi * mi) * static_cast<double>(nu)))
        throw CollinearityError("active-case changes of untreated units have zero variance at period " +
                                std::to_string(t));

    Matrix x(nu, 2);
    std::vector<double> yu(nu);
    for (std::size_t k = 0; k < nu; ++k) {
        x(k, 0) = 1.0;
        x(k, 1) = di[idx[k]];
        yu[k] = dy[idx[k]];
    }
    const LeastSquares ls(x);
    const auto b = ls.solve(yu);
    EconPeriodFit fit;
    fit.t = t;
    fit.tau_tilde = b[0];
    fit.alpha = b[1];
    fit.n_untreated = nu;
    fit.infl_tau.assign(n, 0.0);
    fit.infl_alpha.assign(n, 0.0);
    const Matrix& g = ls.gram_inverse();
    const double nn = static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t k = 0; k < nu; ++k) {
        const double e = yu[k] - b[0] - b[1] * x(k, 1);
        ss += e * e;
        const std::size_t i = idx[k];
        fit.infl_tau[i] = nn * e * (g(0, 0) + g(0, 1) * x(k, 1));
        fit.infl_alpha[i] = nn * e * (g(1, 0) + g(1, 1) * x(k, 1));
    }
    fit.resid_sd = nu > 2 ? std::sqrt(ss / static_cast<double>(nu - 2)) : 0.0;
    return fit;
}

EconFit fit_econ(const Panel& panel, const Cohort& cohort, std::span<const int> periods, bool pooled) {
    EconFit out;
    out.pooled = pooled;
    if (!pooled) {
        for (int t : periods) out.periods.push_back(fit_tau_alpha(panel, cohort, t));
        return out;
    }
    check_untreated(cohort);
    const std::size_t n = cohort.size();
    const std::size_t np = periods.size();
    if (np == 0) throw ParameterError("pooled fit needs at least one period");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
        if (!cohort.treated[i]) idx.push_back(i);
    const std::size_t nu = idx.size();

    std::vector<std::vector<double>> dy(np), di(np);
    for (std::size_t p = 0; p < np; ++p) {
        dy[p] = long_difference(panel, cohort, Var::Y, periods[p]);
        di[p] = long_difference(panel, cohort, Var::I, periods[p]);
    }
    // Rows ordered period-major; columns: one dummy per period, then slope.
    Matrix x(nu * np, np + 1);
    std::vector<double> y(nu * np);
    double mi = 0.0, mi2 = 0.0;
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t k = 0; k < nu; ++k) {
            const std::size_t row = p * nu + k;
            x(row, p) = 1.0;
            x(row, np) = di[p][idx[k]];
            y[row] = dy[p][idx[k]];
            mi += x(row, np);
            mi2 += x(row, np) * x(row, np);
        }
    const double rows = static_cast<double>(nu * np);
    if (!(mi2 / rows - (mi / rows) * (mi / rows) > 1e-12)) throw CollinearityError("pooled active-case changes are constant");
    const LeastSquares ls(x);
    if (ls.rank() < np + 1) throw CollinearityError("pooled tau/alpha design is rank deficient");
    const auto b = ls.solve(y);
    const Matrix& g = ls.gram_inverse();
    const double nn = static_cast<double>(n);

    // Per-unit score sum_t x_it e_it.
    std::vector<std::vector<double>> score(n, std::vector<double>(np + 1, 0.0));
    std::vector<double> ss(np, 0.0);
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t k = 0; k < nu; ++k) {
            const std::size_t row = p * nu + k;
            const double e = y[row] - b[p] - b[np] * x(row, np);
            ss[p] += e * e;
            score[idx[k]][p] += e;
            score[idx[k]][np] += e * x(row, np);
        }
    for (std::size_t p = 0; p < np; ++p) {
        EconPeriodFit f;
        f.t = periods[p];
        f.tau_tilde = b[p];
        f.alpha = b[np];
        f.n_untreated = nu;
        f.resid_sd = nu > 1 ? std::sqrt(ss[p] / static_cast<double>(nu - 1)) : 0.0;
        f.infl_tau.assign(n, 0.0);
        f.infl_alpha.assign(n, 0.0);
        for (auto i : idx) {
            double a = 0.0, c = 0.0;
            for (std::size_t j = 0; j <= np; ++j) {
                a += g(p, j) * score[i][j];
                c += g(np, j) * score[i][j];
            }
            f.infl_tau[i] = nn * a;
            f.infl_alpha[i] = nn * c;
        }
        out.periods.push_back(std::move(f));
    }
    return out;
}

Estimate counterfactual_infections(const Panel& panel, const Cohort& cohort, const DrDesign& design, int t) {
    const auto di = long_difference(panel, cohort, Var::I, t);
    const auto obs = treated_mean(di, cohort.treated);
    const auto att_i = design.estimate(di);
    Estimate out;
    out.value = obs.value - att_i.value;
    out.influence.resize(di.size());
    for (std::size_t i = 0; i < di.size(); ++i) out.influence[i] = obs.influence[i] - att_i.influence[i];
    return out;
}

Estimate att_y_adjusted(const Panel& panel, const Cohort& cohort, const EconPeriodFit& fit,
                        const Estimate& counterfactual_i) {
    const auto dy = long_difference(panel, cohort, Var::Y, fit.t);
    const auto ybar = treated_mean(dy, cohort.treated);
    Estimate out;
    out.value = ybar.value - fit.tau_tilde - fit.alpha * counterfactual_i.value;
    out.influence.resize(dy.size());
    for (std::size_t i = 0; i < dy.size(); ++i)
        out.influence[i] = ybar.influence[i] - fit.infl_tau[i] - fit.alpha * counterfactual_i.influence[i] -
                           counterfactual_i.value * fit.infl_alpha[i];
    return out;
}

Estimate att_y_standard_did(const Panel& panel, const Cohort& cohort, int t) {
    return att_did(panel, cohort, Var::Y, t);
}

Estimate att_y_regression_did(const Panel& panel, const Cohort& cohort, const EconPeriodFit& fit) {
    const auto dy = long_difference(panel, cohort, Var::Y, fit.t);
    const auto di = long_difference(panel, cohort, Var::I, fit.t);
    const auto ybar = treated_mean(dy, cohort.treated);
    const auto ibar = treated_mean(di, cohort.treated);
    Estimate out;
    out.value = ybar.value - fit.tau_tilde - fit.alpha * ibar.value;
    out.influence.resize(dy.size());
    for (std::size_t i = 0; i < dy.size(); ++i)
        out.influence[i] = ybar.influence[i] - fit.infl_tau[i] - fit.alpha * ibar.influence[i] -
                           ibar.value * fit.infl_alpha[i];
    return out;
}

void write_econ_diagnostics_csv(std::ostream& out, std::span<const EconDiagnostic> rows) {
    out << "t,alpha_t,tau_tilde_t,att_i_hat_t\n";
    for (const auto& r : rows)
        out << r.t << ',' << csv::format_number(r.alpha) << ',' << csv::format_number(r.tau_tilde) << ','
            << csv::format_number(r.att_i) << '\n';
}

}  // namespace epipolicy
