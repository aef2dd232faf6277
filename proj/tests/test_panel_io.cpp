#include <doctest.h>

#include "epipolicy/error.hpp"
#include "epipolicy/panel_io.hpp"

#include <cmath>
#include <sstream>

using namespace epipolicy;
using std::chrono::sys_days;

namespace {

std::string three_by_five() {
    std::ostringstream s;
    s << "location,date,cum_cases,cum_tests,population,outcome,region,policy_date\n";
    const char* locs[] = {"AA", "BB", "CC"};
    const char* policy[] = {"2020-03-19", "", ""};
    for (int l = 0; l < 3; ++l)
        for (int d = 0; d < 5; ++d)
            s << locs[l] << ",2020-03-" << 16 + d << ',' << (l + 1) * d * d << ',' << 10 * d << ','
              << (l + 1) * 1000000 << ',' << -d << ',' << (l == 1 ? "West" : "East") << ',' << policy[l] << '\n';
    return s.str();
}

sys_days day(const char* s) { return parse_date(s); }

}  // namespace

TEST_CASE("well-formed file") {
    std::istringstream in(three_by_five());
    const auto r = read_raw_csv(in);
    CHECK(r.rows.size() == 15);
    CHECK(r.has_tests);
    CHECK(r.has_outcome);
    CHECK(r.has_region);
    CHECK(r.has_policy);
    CHECK(r.locations() == std::vector<std::string>{"AA", "BB", "CC"});
    CHECK_FALSE(r.rows[5].policy_date.has_value());
}

TEST_CASE("schema and gap errors") {
    std::string text = three_by_five();
    std::string no_pop = text;
    no_pop.replace(no_pop.find("population"), 10, "pop");
    std::istringstream a(no_pop);
    CHECK_THROWS_WITH_AS(read_raw_csv(a), doctest::Contains("population"), SchemaError);

    // drop BB on 2020-03-18
    std::string gap = text;
    const auto pos = gap.find("BB,2020-03-18");
    gap.erase(pos, gap.find('\n', pos) - pos + 1);
    std::istringstream b(gap);
    CHECK_THROWS_WITH_AS(read_raw_csv(b), doctest::Contains("BB"), GapError);

    CHECK_THROWS_AS(load_panel_csv("/nonexistent/file.csv"), IoError);
}

TEST_CASE("custom column names") {
    std::string text = three_by_five();
    text.replace(text.find("cum_cases"), 9, "cases_total");
    SchemaMapping m;
    m.cum_cases = "cases_total";
    std::istringstream in(text);
    CHECK(read_raw_csv(in, m).rows.size() == 15);
}

TEST_CASE("export then import is the identity") {
    std::istringstream in(three_by_five());
    const auto r = read_raw_csv(in);
    std::ostringstream out;
    write_raw_csv(out, r);
    std::istringstream back(out.str());
    const auto r2 = read_raw_csv(back);
    std::ostringstream out2;
    write_raw_csv(out2, r2);
    CHECK(out2.str() == out.str());
    CHECK(r2.rows.size() == r.rows.size());
}

TEST_CASE("per million scaling") {
    RawSeries s;
    RawRow row;
    row.location = "X";
    row.date = day("2020-03-08");
    row.cum_cases = 500;
    row.population = 5000000;
    row.cum_tests = 2000;
    s.rows.push_back(row);
    row.location = "Y";
    row.cum_cases = 37;
    row.population = 1000000;
    s.rows.push_back(row);
    const auto pm = per_million(s);
    CHECK(pm.rows[0].cum_cases == 100.0);
    CHECK(*pm.rows[0].cum_tests == 400.0);
    CHECK(pm.rows[1].cum_cases == 37.0);
    CHECK(pm.rows[0].cum_cases / *pm.rows[0].cum_tests == s.rows[0].cum_cases / *s.rows[0].cum_tests);
    CHECK(s.rows[0].cum_cases == 500.0);   // input untouched
    CHECK_THROWS_AS(per_million(pm), ParameterError);
    s.rows[1].population = 0;
    CHECK_THROWS_AS(per_million(s), ParameterError);
}

TEST_CASE("active cases over a trailing window") {
    const std::vector<double> c{0, 1, 3, 6, 10};
    CHECK(active_cases(c, 5).active == c);

    std::vector<double> flat(12, 7.0);
    const auto a = active_cases(flat, 5);
    for (std::size_t t = 5; t < 12; ++t) CHECK(a.active[t] == 0.0);
    CHECK(a.active[0] == 7.0);

    std::vector<double> ramp(11);
    for (std::size_t t = 0; t < 11; ++t) ramp[t] = 10.0 * static_cast<double>(t);
    ramp[5] = 40;
    ramp[10] = 100;
    CHECK(active_cases(ramp, 5).active[10] == 60.0);

    const std::vector<double> revised{0, 5, 9, 8, 12, 12};
    const auto r = active_cases(revised, 5);
    CHECK(r.clamped == 1);
    for (double v : r.active) CHECK(v >= 0.0);
    // sum of the nonnegative increments over days 1..5
    CHECK(r.active[5] == 5 + 4 + 0 + 4 + 0);
}

TEST_CASE("adoption groups") {
    std::vector<std::pair<std::string, std::optional<sys_days>>> a{
        {"CA", day("2020-03-19")}, {"IL", day("2020-03-21")}, {"NJ", day("2020-03-21")},
        {"NY", day("2020-03-22")}, {"TX", day("2020-04-02")}, {"IA", std::nullopt}};
    const auto g = assign_groups(a, 5, day("2020-03-18"));
    CHECK(g.bin.at("CA") == 0);
    CHECK(g.bin.at("IL") == 0);
    CHECK(g.bin.at("NJ") == 0);
    CHECK(g.bin.at("NY") == 0);
    CHECK(g.bin.at("TX") == 3);
    CHECK_FALSE(g.bin.at("IA").has_value());
    CHECK(format_date(g.bin_start[0]) == "2020-03-18");

    std::vector<std::pair<std::string, std::optional<sys_days>>> edge{{"A", day("2020-03-18")},
                                                                        {"B", day("2020-03-23")}};
    const auto e = assign_groups(edge, 5);
    CHECK(e.bin.at("A") == 0);
    CHECK(e.bin.at("B") == 1);

    std::vector<std::pair<std::string, std::optional<sys_days>>> none{{"A", std::nullopt}, {"B", std::nullopt}};
    const auto n = assign_groups(none, 5);
    CHECK_FALSE(n.bin.at("A").has_value());
    CHECK_FALSE(n.bin.at("B").has_value());
}

TEST_CASE("raw series to panel") {
    std::istringstream in(three_by_five());
    const auto raw = read_raw_csv(in);
    IngestOptions o;
    o.anchor = day("2020-03-18");
    const auto res = raw_to_panel(raw, o);
    const Panel& p = res.panel;
    CHECK(p.locations() == 3);
    CHECK(p.periods() == 5);
    CHECK(p.group(0) == 2);      // AA adopted Mar 19, bin starts Mar 18 = period 2
    CHECK_FALSE(p.group(1).has_value());
    // CC: cum cases 3 d^2 over population 3e6 -> d^2 per million
    CHECK(p.at(Var::C, 2, 4) == doctest::Approx(16.0));
    CHECK(p.at(Var::S, 2, 4) == doctest::Approx(1e6 - 16.0));
    CHECK(p.at(Var::I, 2, 4) == doctest::Approx(16.0));
    CHECK(p.at(Var::R, 2, 4) == doctest::Approx(0.0).scale(1.0));
    CHECK(p.covariate_index("tests").has_value());
    CHECK(p.covariate_index("region_West").has_value());
    CHECK_FALSE(p.covariate_index("region_East").has_value());
    CHECK(p.has_outcome());
    CHECK(std::isfinite(p.at(Var::Y, 0, 3)));
}
