#include "epipolicy/panel_io.hpp"

#include "epipolicy/csv.hpp"
#include "epipolicy/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <unordered_map>

namespace epipolicy {

namespace {

constexpr double kMillion = 1e6;

using Days = std::chrono::sys_days;

}  // namespace

Days parse_date(const std::string& text) {
    const std::string s = csv::trim(text);
    int y = 0;
    unsigned m = 0, d = 0;
    auto bad = [&] { return SchemaError("date '" + s + "' is not YYYY-MM-DD"); };
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw bad();
    if (std::from_chars(s.data(), s.data() + 4, y).ec != std::errc{}) throw bad();
    if (std::from_chars(s.data() + 5, s.data() + 7, m).ec != std::errc{}) throw bad();
    if (std::from_chars(s.data() + 8, s.data() + 10, d).ec != std::errc{}) throw bad();
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw bad();
    return Days{ymd};
}

std::string format_date(Days d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

std::vector<std::string> RawSeries::locations() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
        if (out.empty() || out.back() != r.location) out.push_back(r.location);
    return out;
}

RawSeries read_raw_csv(std::istream& in, const SchemaMapping& mapping) {
    std::string line;
    if (!csv::read_line(in, line)) throw SchemaError("input file is empty");
    const auto header = csv::split_line(line);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t k = 0; k < header.size(); ++k) col[csv::trim(header[k])] = k;
    auto required = [&](const std::string& name) {
        auto it = col.find(name);
        if (name.empty() || it == col.end()) throw SchemaError("missing required column '" + name + "'");
        return it->second;
    };
    auto optional_col = [&](const std::string& name) -> std::optional<std::size_t> {
        if (name.empty()) return std::nullopt;
        auto it = col.find(name);
        if (it == col.end()) return std::nullopt;
        return it->second;
    };
    const auto c_loc = required(mapping.location);
    const auto c_date = required(mapping.date);
    const auto c_cases = required(mapping.cum_cases);
    const auto c_pop = required(mapping.population);
    const auto c_tests = optional_col(mapping.cum_tests);
    const auto c_out = optional_col(mapping.outcome);
    const auto c_region = optional_col(mapping.region);
    const auto c_policy = optional_col(mapping.policy_date);

    RawSeries s;
    s.has_tests = c_tests.has_value();
    s.has_outcome = c_out.has_value();
    s.has_region = c_region.has_value();
    s.has_policy = c_policy.has_value();
    std::size_t line_no = 1;
    while (csv::read_line(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split_line(line);
        if (f.size() < header.size())
            throw SchemaError("line " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields, expected " +
                              std::to_string(header.size()));
        RawRow r;
        r.location = csv::trim(f[c_loc]);
        r.date = parse_date(f[c_date]);
        r.cum_cases = csv::parse_number(f[c_cases], mapping.cum_cases);
        r.population = csv::parse_number(f[c_pop], mapping.population);
        if (c_tests) {
            const double v = csv::parse_number(f[*c_tests], mapping.cum_tests);
            if (std::isfinite(v)) r.cum_tests = v;
        }
        if (c_out) {
            const double v = csv::parse_number(f[*c_out], mapping.outcome);
            if (std::isfinite(v)) r.outcome = v;
        }
        if (c_region) r.region = csv::trim(f[*c_region]);
        if (c_policy) {
            const auto p = csv::trim(f[*c_policy]);
            if (!p.empty() && p != "NA" && p != "never") r.policy_date = parse_date(p);
        }
        s.rows.push_back(std::move(r));
    }
    std::stable_sort(s.rows.begin(), s.rows.end(), [](const RawRow& a, const RawRow& b) {
        return a.location != b.location ? a.location < b.location : a.date < b.date;
    });

    // Contiguity and a common date span.
    std::optional<Days> first, last;
    std::string gaps;
    int n_gaps = 0;
    std::size_t i = 0;
    while (i < s.rows.size()) {
        std::size_t j = i;
        while (j + 1 < s.rows.size() && s.rows[j + 1].location == s.rows[i].location) ++j;
        for (std::size_t k = i + 1; k <= j; ++k) {
            const auto step = (s.rows[k].date - s.rows[k - 1].date).count();
            if (step == 0)
                throw SchemaError("duplicate row for (" + s.rows[k].location + ", " + format_date(s.rows[k].date) + ")");
            for (auto d = s.rows[k - 1].date + std::chrono::days{1}; d < s.rows[k].date; d += std::chrono::days{1}) {
                if (n_gaps++ < 20) gaps += " (" + s.rows[k].location + ", " + format_date(d) + ")";
            }
        }
        if (!first) {
            first = s.rows[i].date;
            last = s.rows[j].date;
        } else if (s.rows[i].date != *first || s.rows[j].date != *last) {
            if (n_gaps++ < 20)
                gaps += " (" + s.rows[i].location + ", span " + format_date(s.rows[i].date) + ".." +
                        format_date(s.rows[j].date) + " differs from " + format_date(*first) + ".." +
                        format_date(*last) + ")";
        }
        i = j + 1;
    }
    if (n_gaps > 0) throw GapError("missing dates:" + gaps + (n_gaps > 20 ? " ..." : ""));
    return s;
}

RawSeries load_panel_csv(const std::string& path, const SchemaMapping& mapping) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_raw_csv(in, mapping);
}

void write_raw_csv(std::ostream& out, const RawSeries& s, const SchemaMapping& mapping) {
    out << mapping.location << ',' << mapping.date << ',' << mapping.cum_cases << ',' << mapping.population;
    if (s.has_tests) out << ',' << mapping.cum_tests;
    if (s.has_outcome) out << ',' << mapping.outcome;
    if (s.has_region) out << ',' << mapping.region;
    if (s.has_policy) out << ',' << mapping.policy_date;
    out << '\n';
    for (const auto& r : s.rows) {
        out << r.location << ',' << format_date(r.date) << ',' << csv::format_number(r.cum_cases) << ','
            << csv::format_number(r.population);
        if (s.has_tests) out << ',' << (r.cum_tests ? csv::format_number(*r.cum_tests) : "NA");
        if (s.has_outcome) out << ',' << (r.outcome ? csv::format_number(*r.outcome) : "NA");
        if (s.has_region) out << ',' << r.region;
        if (s.has_policy) out << ',' << (r.policy_date ? format_date(*r.policy_date) : "");
        out << '\n';
    }
}

RawSeries per_million(const RawSeries& series) {
    if (series.per_million) throw ParameterError("series is already per million; scaling twice would be wrong");
    RawSeries out = series;
    for (auto& r : out.rows) {
        if (!(r.population > 0.0))
            throw ParameterError("location " + r.location + " has nonpositive population on " + format_date(r.date));
        const double k = kMillion / r.population;
        r.cum_cases *= k;
        if (r.cum_tests) *r.cum_tests *= k;
    }
    out.per_million = true;
    return out;
}

ActiveCases active_cases(std::span<const double> cumulative, int window) {
    if (window < 1) throw ParameterError("active-case window must be at least 1 day");
    ActiveCases out;
    const std::size_t n = cumulative.size();
    std::vector<double> running(n);
    double prev = 0.0, acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double inc = cumulative[t] - prev;
        if (inc < 0.0) {
            inc = 0.0;
            ++out.clamped;
        }
        acc += inc;
        running[t] = acc;
        prev = cumulative[t];
    }
    out.active.resize(n);
    const auto w = static_cast<std::size_t>(window);
    for (std::size_t t = 0; t < n; ++t) out.active[t] = running[t] - (t >= w ? running[t - w] : 0.0);
    return out;
}

GroupBins assign_groups(const std::vector<std::pair<std::string, std::optional<Days>>>& adoptions, int window,
                        std::optional<Days> anchor) {
    if (window < 1) throw ParameterError("group window must be at least 1 day");
    GroupBins bins;
    bins.window = window;
    std::optional<Days> earliest;
    for (const auto& [loc, d] : adoptions)
        if (d && (!earliest || *d < *earliest)) earliest = d;
    if (anchor) bins.anchor = *anchor;
    else if (earliest) bins.anchor = *earliest;
    int max_bin = -1;
    for (const auto& [loc, d] : adoptions) {
        if (!d) {
            bins.bin[loc] = std::nullopt;
            continue;
        }
        const auto offset = (*d - bins.anchor).count();
        if (offset < 0)
            throw ParameterError("adoption date " + format_date(*d) + " of " + loc + " precedes the anchor " +
                                 format_date(bins.anchor));
        const int k = static_cast<int>(offset / window);
        bins.bin[loc] = k;
        max_bin = std::max(max_bin, k);
    }
    for (int k = 0; k <= max_bin; ++k) bins.bin_start.push_back(bins.anchor + std::chrono::days{k * window});
    return bins;
}

IngestResult raw_to_panel(const RawSeries& input, const IngestOptions& options) {
    const RawSeries s = options.normalize && !input.per_million ? per_million(input) : input;
    const auto locs = s.locations();
    if (locs.empty()) throw SchemaError("no rows to ingest");
    const std::size_t n = locs.size();
    const std::size_t T = s.rows.size() / n;
    if (T * n != s.rows.size()) throw GapError("locations have different numbers of days");
    const Days day0 = s.rows.front().date;

    std::set<std::string> region_set;
    if (s.has_region)
        for (const auto& r : s.rows) region_set.insert(r.region);
    const std::vector<std::string> regions(region_set.begin(), region_set.end());

    IngestResult res;
    Panel panel(n, T);
    if (s.has_outcome) panel.enable_outcome();
    std::optional<std::size_t> k_tests;
    if (s.has_tests) k_tests = panel.add_covariate("tests");
    std::vector<std::size_t> k_region;
    for (std::size_t k = 1; k < regions.size(); ++k) k_region.push_back(panel.add_covariate("region_" + regions[k]));
    std::vector<std::string> labels;
    for (std::size_t t = 0; t < T; ++t) labels.push_back(format_date(day0 + std::chrono::days{static_cast<int>(t)}));
    panel.set_period_labels(labels);

    std::vector<std::pair<std::string, std::optional<Days>>> adoptions;
    for (std::size_t l = 0; l < n; ++l) {
        const RawRow* rows = &s.rows[l * T];
        panel.set_id(l, locs[l]);
        panel.set_population(l, rows[0].population);
        std::vector<double> cum(T);
        for (std::size_t t = 0; t < T; ++t) cum[t] = rows[t].cum_cases;
        const auto act = active_cases(cum, options.active_window);
        if (act.clamped > 0) res.clamped_increments[locs[l]] = act.clamped;
        const double scale = s.per_million ? kMillion : rows[0].population;
        std::optional<Days> policy;
        for (std::size_t t = 0; t < T; ++t) {
            const RawRow& r = rows[t];
            const double c = cum[t];
            panel.at(Var::S, l, t) = scale - c;
            panel.at(Var::I, l, t) = act.active[t];
            panel.at(Var::R, l, t) = c - act.active[t];
            panel.at(Var::D, l, t) = 0.0;
            panel.at(Var::C, l, t) = c;
            if (s.has_outcome) panel.at(Var::Y, l, t) = r.outcome ? *r.outcome : std::nan("");
            if (k_tests) panel.covariate(*k_tests, l, t) = r.cum_tests ? *r.cum_tests : std::nan("");
            for (std::size_t k = 0; k < k_region.size(); ++k)
                panel.covariate(k_region[k], l, t) = r.region == regions[k + 1] ? 1.0 : 0.0;
            if (r.policy_date) {
                if (policy && *policy != *r.policy_date)
                    throw SchemaError("location " + locs[l] + " has more than one policy date");
                policy = r.policy_date;
            }
        }
        adoptions.emplace_back(locs[l], policy);
    }

    res.bins = assign_groups(adoptions, options.group_window, options.anchor);
    for (std::size_t l = 0; l < n; ++l) {
        const auto b = res.bins.bin.at(locs[l]);
        if (!b) continue;
        const auto start = res.bins.bin_start[static_cast<std::size_t>(*b)];
        const auto idx = (start - day0).count();
        if (idx < 1 || static_cast<std::size_t>(idx) >= T)
            throw ParameterError("adoption bin starting " + format_date(start) + " is outside the observed dates " +
                                 "(needs at least one earlier day)");
        panel.set_group(l, static_cast<int>(idx));
    }
    res.panel = std::move(panel);
    return res;
}

}  // namespace epipolicy
