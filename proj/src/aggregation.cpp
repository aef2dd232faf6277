#include "epipolicy/aggregation.hpp"

#include "epipolicy/csv.hpp"
#include "epipolicy/error.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <set>

namespace epipolicy {

namespace {

struct CellModel {
    Cohort cohort;
    TrimResult trim;
    std::unique_ptr<DrDesign> design;
    std::optional<EconFit> pooled;
    std::string error;
};

DrVariant variant_for(EstimatorKind k, DrVariant fallback) {
    switch (k) {
        case EstimatorKind::DrCases: return DrVariant::DoublyRobust;
        case EstimatorKind::IpwCases: return DrVariant::Ipw;
        case EstimatorKind::RaCases: return DrVariant::RegressionAdjustment;
        case EstimatorKind::AdjDidY: return DrVariant::DoublyRobust;
        default: return fallback;
    }
}

bool needs_design(EstimatorKind k) {
    return k == EstimatorKind::DrCases || k == EstimatorKind::IpwCases || k == EstimatorKind::RaCases ||
           k == EstimatorKind::AdjDidY;
}

bool needs_econ_fit(EstimatorKind k) { return k == EstimatorKind::RegDidY || k == EstimatorKind::AdjDidY; }

}  // namespace

const char* estimator_name(EstimatorKind k) noexcept {
    switch (k) {
        case EstimatorKind::DidCases: return "did-cases";
        case EstimatorKind::DrCases: return "dr-cases";
        case EstimatorKind::IpwCases: return "ipw-cases";
        case EstimatorKind::RaCases: return "ra-cases";
        case EstimatorKind::StdDidY: return "std-did-y";
        case EstimatorKind::RegDidY: return "reg-did-y";
        case EstimatorKind::AdjDidY: return "adj-did-y";
    }
    return "?";
}

EstimatorKind parse_estimator(const std::string& name) {
    for (auto k : {EstimatorKind::DidCases, EstimatorKind::DrCases, EstimatorKind::IpwCases, EstimatorKind::RaCases,
                   EstimatorKind::StdDidY, EstimatorKind::RegDidY, EstimatorKind::AdjDidY})
        if (name == estimator_name(k)) return k;
    throw ParameterError("unknown estimator '" + name + "'");
}

bool uses_outcome_y(EstimatorKind k) noexcept {
    return k == EstimatorKind::StdDidY || k == EstimatorKind::RegDidY || k == EstimatorKind::AdjDidY;
}

bool uses_propensity(EstimatorKind k) noexcept {
    return k == EstimatorKind::DrCases || k == EstimatorKind::IpwCases || k == EstimatorKind::AdjDidY;
}

const GridCell* GroupTimeGrid::find(int g, int t) const {
    for (const auto& c : cells)
        if (c.g == g && c.t == t) return &c;
    return nullptr;
}

GroupTimeGrid group_time_att(const Panel& panel, const GridOptions& options) {
    if (options.pooled_alpha && options.comparison != Comparison::NeverOnly)
        throw ParameterError("pooled alpha needs never-treated-only comparisons");
    if (uses_outcome_y(options.estimator) && !panel.has_outcome())
        throw SchemaError(std::string("estimator ") + estimator_name(options.estimator) +
                          " needs an outcome column Y");

    const std::size_t n = panel.locations();
    const int T = static_cast<int>(panel.periods());
    GroupTimeGrid grid;
    grid.n_locations = n;
    grid.groups = panel.adoption_groups();
    grid.location_group.assign(n, 0);
    grid.location_population.assign(n, 0.0);
    bool any_never = false;
    for (std::size_t l = 0; l < n; ++l) {
        const auto g = panel.group(l);
        grid.location_population[l] = panel.population(l);
        if (g) {
            grid.location_group[l] = *g;
            grid.group_size[*g] += 1;
            grid.group_mass[*g] += panel.population(l);
        } else {
            any_never = true;
        }
    }
    if (grid.groups.empty()) throw ParameterError("panel has no treated locations");
    if (grid.groups.size() < 2 && !any_never)
        throw ParameterError("group-time effects need two adoption groups or a never-treated group");

    CaseModelSpec spec = options.model;
    spec.variant = variant_for(options.estimator, spec.variant);
    const bool trim = options.trim_cap.has_value() && uses_propensity(options.estimator);

    for (int g : grid.groups) {
        const int t_end = options.horizon > 0 ? std::min(g + options.horizon - 1, T - 1) : T - 1;
        std::map<std::vector<std::size_t>, CellModel> cache;
        for (int t = g; t <= t_end; ++t) {
            GridCell cell;
            cell.g = g;
            cell.t = t;
            Cohort raw;
            raw.base_period = g - 1;
            for (std::size_t l = 0; l < n; ++l) {
                const auto lg = panel.group(l);
                const bool treated = lg && *lg == g;
                const bool comparison = !lg || (options.comparison == Comparison::NeverAndNotYet && *lg > t);
                if (treated || comparison) {
                    raw.units.push_back(l);
                    raw.treated.push_back(treated ? 1 : 0);
                }
            }
            if (g < 1) {
                cell.missing = true;
                cell.reason = "no period before adoption";
            } else if (raw.n_untreated() == 0) {
                cell.missing = true;
                cell.reason = "no comparison locations";
            }
            if (cell.missing) {
                grid.cells.push_back(std::move(cell));
                continue;
            }

            auto it = cache.find(raw.units);
            if (it == cache.end()) {
                CellModel model;
                try {
                    if (trim) {
                        auto tc = trim_cohort(panel, raw, spec, *options.trim_cap, options.symmetric_trim);
                        model.cohort = std::move(tc.cohort);
                        model.trim = std::move(tc.trim);
                    } else {
                        model.cohort = raw;
                    }
                    if (needs_design(options.estimator)) {
                        const auto state = pre_treatment_state(panel, model.cohort, spec.propensity.covariates);
                        model.design = std::make_unique<DrDesign>(state, model.cohort.treated, spec);
                    }
                    if (options.pooled_alpha && needs_econ_fit(options.estimator)) {
                        std::vector<int> periods;
                        for (int s = g; s <= t_end; ++s) periods.push_back(s);
                        model.pooled = fit_econ(panel, model.cohort, periods, true);
                    }
                } catch (const Error& e) {
                    model.error = e.what();
                }
                it = cache.emplace(raw.units, std::move(model)).first;
            }
            const CellModel& model = it->second;
            cell.n_dropped = model.trim.dropped.size();
            cell.dropped_ids = model.trim.dropped_ids;
            if (!model.error.empty()) {
                cell.missing = true;
                cell.reason = model.error;
                grid.cells.push_back(std::move(cell));
                continue;
            }
            const Cohort& cohort = model.cohort;
            cell.n_treated = cohort.n_treated();
            cell.n_untreated = cohort.n_untreated();
            if (model.design) {
                cell.separation = model.design->separation();
                cell.clipped = model.design->clipped();
            }

            try {
                Estimate est;
                switch (options.estimator) {
                    case EstimatorKind::DidCases: est = att_did(panel, cohort, Var::C, t); break;
                    case EstimatorKind::DrCases:
                    case EstimatorKind::IpwCases:
                    case EstimatorKind::RaCases: est = att_dr(panel, cohort, *model.design, Var::C, t); break;
                    case EstimatorKind::StdDidY: est = att_y_standard_did(panel, cohort, t); break;
                    case EstimatorKind::RegDidY:
                    case EstimatorKind::AdjDidY: {
                        const EconPeriodFit fit = model.pooled ? model.pooled->at(t) : fit_tau_alpha(panel, cohort, t);
                        cell.alpha = fit.alpha;
                        cell.tau_tilde = fit.tau_tilde;
                        if (options.estimator == EstimatorKind::RegDidY) {
                            est = att_y_regression_did(panel, cohort, fit);
                        } else {
                            const auto cf = counterfactual_infections(panel, cohort, *model.design, t);
                            cell.att_i = att_dr(panel, cohort, *model.design, Var::I, t).value;
                            est = att_y_adjusted(panel, cohort, fit, cf);
                        }
                        break;
                    }
                }
                cell.estimate = est.value;
                cell.influence.assign(n, 0.0);
                const double scale = static_cast<double>(n) / static_cast<double>(cohort.size());
                for (std::size_t k = 0; k < cohort.size(); ++k)
                    cell.influence[cohort.units[k]] = scale * est.influence[k];
            } catch (const Error& e) {
                cell.missing = true;
                cell.reason = e.what();
            }
            grid.cells.push_back(std::move(cell));
        }
    }
    return grid;
}

AttSeries event_study(const GroupTimeGrid& grid, GroupWeighting weighting) {
    if (grid.cells.empty()) throw ParameterError("event study needs a nonempty grid");
    const std::size_t n = grid.n_locations;
    const double nn = static_cast<double>(n);
    std::vector<double> unit_mass(n);
    for (std::size_t i = 0; i < n; ++i)
        unit_mass[i] = weighting == GroupWeighting::Population ? grid.location_population[i] : 1.0;
    auto group_share = [&](int g) {
        const double m = weighting == GroupWeighting::Population ? grid.group_mass.at(g)
                                                                 : static_cast<double>(grid.group_size.at(g));
        return m / nn;
    };

    int max_e = -1;
    for (const auto& c : grid.cells)
        if (!c.missing) max_e = std::max(max_e, c.t - c.g);

    AttSeries es;
    es.index_name = "e";
    for (int e = 0; e <= max_e; ++e) {
        std::vector<const GridCell*> cells;
        for (int g : grid.groups)
            if (const auto* c = grid.find(g, g + e); c && !c->missing) cells.push_back(c);
        if (cells.empty()) continue;

        double total = 0.0;
        for (const auto* c : cells) total += group_share(c->g);
        AttPoint pt;
        pt.index = e;
        std::vector<double> infl(n, 0.0);
        for (const auto* c : cells) {
            const double w = group_share(c->g) / total;
            pt.estimate += w * c->estimate;
            for (std::size_t i = 0; i < n; ++i) infl[i] += w * c->influence[i];
            pt.n_treated += c->n_treated;
            pt.n_untreated = std::max(pt.n_untreated, c->n_untreated);
            pt.n_dropped += c->n_dropped;
        }
        if (cells.size() > 1) {
            // Estimation effect of the group shares.
            for (std::size_t i = 0; i < n; ++i) {
                double dev_sum = 0.0;
                for (const auto* c : cells) {
                    const double own = grid.location_group[i] == c->g ? unit_mass[i] : 0.0;
                    dev_sum += own - group_share(c->g);
                }
                double term = 0.0;
                for (const auto* c : cells) {
                    const double pi = group_share(c->g);
                    const double own = grid.location_group[i] == c->g ? unit_mass[i] : 0.0;
                    term += c->estimate * ((own - pi) / total - pi * dev_sum / (total * total));
                }
                infl[i] += term;
            }
        }
        es.points.push_back(pt);
        es.influence.push_column(infl);
    }
    return es;
}

OverallAtt overall_att(const AttSeries& es, int horizon, const BootstrapOptions& options, Rng& rng) {
    if (horizon < 1) throw ParameterError("overall effect needs a horizon of at least 1");
    std::vector<std::size_t> cols;
    for (int e = 0; e < horizon; ++e) {
        bool found = false;
        for (std::size_t j = 0; j < es.points.size(); ++j)
            if (es.points[j].index == e) {
                cols.push_back(j);
                found = true;
                break;
            }
        if (!found)
            throw ParameterError("event time " + std::to_string(e) + " is not available for the overall effect");
    }
    const std::size_t n = es.influence.rows();
    OverallAtt out;
    out.horizon = horizon;
    out.influence.assign(n, 0.0);
    const double inv_h = 1.0 / static_cast<double>(horizon);
    for (auto j : cols) {
        out.estimate += es.points[j].estimate * inv_h;
        for (std::size_t i = 0; i < n; ++i) out.influence[i] += es.influence(i, j) * inv_h;
    }
    InfluenceMatrix m(n, 1);
    m.set_column(0, out.influence);
    const auto boot = multiplier_bootstrap(m, options, rng);
    out.se = boot.se[0];
    if (out.se > 0.0) out.p_value = 2.0 * (1.0 - normal_cdf(std::abs(out.estimate) / out.se));
    else out.p_value = out.estimate == 0.0 ? 1.0 : 0.0;
    return out;
}

void write_grid_csv(std::ostream& out, const GroupTimeGrid& grid, const BootstrapOptions& options, Rng& rng) {
    AttSeries s;
    std::vector<const GridCell*> present;
    for (const auto& c : grid.cells)
        if (!c.missing) {
            present.push_back(&c);
            AttPoint p;
            p.index = c.t;
            p.estimate = c.estimate;
            p.n_treated = c.n_treated;
            p.n_untreated = c.n_untreated;
            p.n_dropped = c.n_dropped;
            s.points.push_back(p);
            s.influence.push_column(c.influence);
        }
    if (!present.empty()) attach_inference(s, options, rng);
    out << "g,t,estimate,se,band_lo,band_hi,n_treated,n_untreated,n_dropped\n";
    std::size_t k = 0;
    for (const auto& c : grid.cells) {
        out << c.g << ',' << c.t << ',';
        if (c.missing) {
            out << "NA,NA,NA,NA," << c.n_treated << ',' << c.n_untreated << ',' << c.n_dropped << '\n';
            continue;
        }
        const auto& p = s.points[k++];
        out << csv::format_number(p.estimate) << ',' << csv::format_number(p.se) << ','
            << csv::format_number(p.band_lo) << ',' << csv::format_number(p.band_hi) << ',' << p.n_treated << ','
            << p.n_untreated << ',' << p.n_dropped << '\n';
    }
}

}  // namespace epipolicy
