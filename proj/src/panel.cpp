#include "epipolicy/panel.hpp"

#include "epipolicy/csv.hpp"
#include "epipolicy/error.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

namespace epipolicy {

Panel::Panel(std::size_t n_locations, std::size_t n_periods)
    : n_locations_(n_locations),
      n_periods_(n_periods),
      ids_(n_locations),
      group_(n_locations),
      population_(n_locations, 0.0),
      s_(n_locations * n_periods, 0.0),
      i_(n_locations * n_periods, 0.0),
      r_(n_locations * n_periods, 0.0),
      d_(n_locations * n_periods, 0.0),
      c_(n_locations * n_periods, 0.0) {
    for (std::size_t l = 0; l < n_locations; ++l) ids_[l] = std::to_string(l);
}

void Panel::enable_outcome() {
    if (!has_outcome_) {
        y_.assign(n_locations_ * n_periods_, 0.0);
        has_outcome_ = true;
    }
}

const std::vector<double>& Panel::store(Var v) const {
    switch (v) {
        case Var::S: return s_;
        case Var::I: return i_;
        case Var::R: return r_;
        case Var::D: return d_;
        case Var::C: return c_;
        case Var::Y:
            if (!has_outcome_) throw Error("panel has no outcome variable Y");
            return y_;
    }
    return c_;
}

std::vector<double>& Panel::store(Var v) {
    return const_cast<std::vector<double>&>(static_cast<const Panel*>(this)->store(v));
}

std::vector<int> Panel::adoption_groups() const {
    std::set<int> g;
    for (const auto& x : group_)
        if (x) g.insert(*x);
    return {g.begin(), g.end()};
}

std::size_t Panel::add_covariate(const std::string& name) {
    if (covariate_index(name)) throw SchemaError("duplicate covariate '" + name + "'");
    covariate_names_.push_back(name);
    covariates_.emplace_back(n_locations_ * n_periods_, 0.0);
    return covariates_.size() - 1;
}

std::optional<std::size_t> Panel::covariate_index(const std::string& name) const {
    for (std::size_t k = 0; k < covariate_names_.size(); ++k)
        if (covariate_names_[k] == name) return k;
    return std::nullopt;
}

Panel Panel::subset(std::span<const std::size_t> locs) const {
    Panel out(locs.size(), n_periods_);
    if (has_outcome_) out.enable_outcome();
    for (const auto& name : covariate_names_) out.add_covariate(name);
    out.period_labels_ = period_labels_;
    if (counterfactual_) out.counterfactual_.emplace();
    const std::size_t T = n_periods_;
    auto copy_rows = [&](const std::vector<double>& src, std::vector<double>& dst) {
        for (std::size_t k = 0; k < locs.size(); ++k)
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(locs[k] * T), T,
                        dst.begin() + static_cast<std::ptrdiff_t>(k * T));
    };
    for (std::size_t k = 0; k < locs.size(); ++k) {
        out.ids_[k] = ids_[locs[k]];
        out.group_[k] = group_[locs[k]];
        out.population_[k] = population_[locs[k]];
    }
    copy_rows(s_, out.s_);
    copy_rows(i_, out.i_);
    copy_rows(r_, out.r_);
    copy_rows(d_, out.d_);
    copy_rows(c_, out.c_);
    if (has_outcome_) copy_rows(y_, out.y_);
    for (std::size_t c = 0; c < covariates_.size(); ++c) copy_rows(covariates_[c], out.covariates_[c]);
    if (counterfactual_) {
        auto& cf = *out.counterfactual_;
        const auto& src = *counterfactual_;
        cf.c0.assign(locs.size() * T, 0.0);
        cf.i0.assign(locs.size() * T, 0.0);
        copy_rows(src.c0, cf.c0);
        copy_rows(src.i0, cf.i0);
        if (!src.y0.empty()) {
            cf.y0.assign(locs.size() * T, 0.0);
            copy_rows(src.y0, cf.y0);
        }
    }
    return out;
}

void Panel::validate() const {
    if (n_locations_ == 0 || n_periods_ == 0) throw Error("panel is empty");
    for (std::size_t l = 0; l < n_locations_; ++l) {
        if (group_[l] && (*group_[l] < 1 || static_cast<std::size_t>(*group_[l]) >= n_periods_ + 1))
            throw Error("location " + ids_[l] + " has adoption period " + std::to_string(*group_[l]) +
                        " outside [1, " + std::to_string(n_periods_) + "]");
        if (!(population_[l] > 0.0)) throw Error("location " + ids_[l] + " has nonpositive population");
    }
    auto finite = [&](const std::vector<double>& v, const char* name) {
        for (double x : v)
            if (!std::isfinite(x)) throw Error(std::string("non-finite value in panel variable ") + name);
    };
    finite(s_, "S");
    finite(i_, "I");
    finite(c_, "C");
}

namespace {

const char* const kBaseColumns[] = {"location_id", "group", "t", "S", "I", "R", "D", "C", "Y", "pop"};
constexpr std::size_t kBaseCount = 10;

}  // namespace

void write_panel_csv(std::ostream& out, const Panel& panel) {
    for (std::size_t k = 0; k < kBaseCount; ++k) out << (k ? "," : "") << kBaseColumns[k];
    for (const auto& name : panel.covariate_names()) out << ',' << name;
    out << '\n';
    for (std::size_t l = 0; l < panel.locations(); ++l) {
        const auto g = panel.group(l);
        const std::string group = g ? std::to_string(*g) : "never";
        for (std::size_t t = 0; t < panel.periods(); ++t) {
            out << panel.id(l) << ',' << group << ',' << t;
            for (Var v : {Var::S, Var::I, Var::R, Var::D, Var::C})
                out << ',' << csv::format_number(panel.at(v, l, t));
            out << ',';
            if (panel.has_outcome()) out << csv::format_number(panel.at(Var::Y, l, t));
            out << ',' << csv::format_number(panel.population(l));
            for (std::size_t k = 0; k < panel.covariate_names().size(); ++k)
                out << ',' << csv::format_number(panel.covariate(k, l, t));
            out << '\n';
        }
    }
}

Panel read_panel_csv(std::istream& in) {
    std::string line;
    if (!csv::read_line(in, line)) throw SchemaError("panel file is empty");
    const auto header = csv::split_line(line);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t k = 0; k < header.size(); ++k) col[csv::trim(header[k])] = k;
    for (const char* name : kBaseColumns)
        if (!col.count(name)) throw SchemaError(std::string("panel file lacks required column '") + name + "'");
    std::vector<std::pair<std::string, std::size_t>> extra;
    for (std::size_t k = 0; k < header.size(); ++k) {
        const std::string h = csv::trim(header[k]);
        if (std::find(std::begin(kBaseColumns), std::end(kBaseColumns), h) == std::end(kBaseColumns))
            extra.emplace_back(h, k);
    }

    struct Row {
        long long t;
        double s, i, r, d, c, y, pop;
        bool has_y;
        std::vector<double> cov;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::string> groups;
    std::vector<std::vector<Row>> rows;
    std::size_t line_no = 1;
    while (csv::read_line(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split_line(line);
        if (f.size() != header.size())
            throw SchemaError("panel line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                              " fields, expected " + std::to_string(header.size()));
        const std::string id = csv::trim(f[col["location_id"]]);
        auto [it, inserted] = index.emplace(id, order.size());
        if (inserted) {
            order.push_back(id);
            groups.push_back(csv::trim(f[col["group"]]));
            rows.emplace_back();
        } else if (groups[it->second] != csv::trim(f[col["group"]])) {
            throw SchemaError("location " + id + " has inconsistent group labels");
        }
        Row r{};
        r.t = csv::parse_integer(f[col["t"]], "t");
        r.s = csv::parse_number(f[col["S"]], "S");
        r.i = csv::parse_number(f[col["I"]], "I");
        r.r = csv::parse_number(f[col["R"]], "R");
        r.d = csv::parse_number(f[col["D"]], "D");
        r.c = csv::parse_number(f[col["C"]], "C");
        const std::string ytext = csv::trim(f[col["Y"]]);
        r.has_y = !ytext.empty();
        r.y = r.has_y ? csv::parse_number(ytext, "Y") : 0.0;
        r.pop = csv::parse_number(f[col["pop"]], "pop");
        for (const auto& [name, k] : extra) r.cov.push_back(csv::parse_number(f[k], name));
        rows[it->second].push_back(std::move(r));
    }
    if (order.empty()) throw SchemaError("panel file has no data rows");

    const std::size_t T = rows.front().size();
    bool any_y = false;
    for (std::size_t l = 0; l < order.size(); ++l) {
        auto& rs = rows[l];
        std::sort(rs.begin(), rs.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
        if (rs.size() != T)
            throw GapError("panel is not rectangular: location " + order[l] + " has " + std::to_string(rs.size()) +
                           " periods, expected " + std::to_string(T));
        for (std::size_t t = 0; t < T; ++t)
            if (rs[t].t != static_cast<long long>(t))
                throw GapError("location " + order[l] + " is missing period " + std::to_string(t));
        for (const auto& r : rs) any_y = any_y || r.has_y;
    }

    Panel panel(order.size(), T);
    if (any_y) panel.enable_outcome();
    for (const auto& [name, k] : extra) panel.add_covariate(name);
    for (std::size_t l = 0; l < order.size(); ++l) {
        panel.set_id(l, order[l]);
        if (groups[l] != "never" && !groups[l].empty())
            panel.set_group(l, static_cast<int>(csv::parse_integer(groups[l], "group")));
        panel.set_population(l, rows[l].front().pop);
        for (std::size_t t = 0; t < T; ++t) {
            const auto& r = rows[l][t];
            panel.at(Var::S, l, t) = r.s;
            panel.at(Var::I, l, t) = r.i;
            panel.at(Var::R, l, t) = r.r;
            panel.at(Var::D, l, t) = r.d;
            panel.at(Var::C, l, t) = r.c;
            if (any_y) {
                if (!r.has_y) throw SchemaError("location " + order[l] + " is missing Y at t=" + std::to_string(t));
                panel.at(Var::Y, l, t) = r.y;
            }
            for (std::size_t k = 0; k < extra.size(); ++k) panel.covariate(k, l, t) = r.cov[k];
        }
    }
    panel.validate();
    return panel;
}

}  // namespace epipolicy
