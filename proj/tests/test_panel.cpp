#include <doctest.h>

#include "epipolicy/csv.hpp"
#include "epipolicy/error.hpp"
#include "epipolicy/manifest.hpp"
#include "epipolicy/panel.hpp"
#include "epipolicy/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace epipolicy;

namespace {

ScenarioConfig small_config() {
    ScenarioConfig c;
    c.n_locations = 30;
    c.t_total = 80;
    c.policy_time = 40;
    c.lambda_d = 10;
    c.lambda_u = 15;
    return c;
}

}  // namespace

TEST_CASE("csv helpers") {
    const auto f = csv::split_line("a,\"b,c\",\"d\"\"e\",");
    REQUIRE(f.size() == 4);
    CHECK(f[1] == "b,c");
    CHECK(f[2] == "d\"e");
    CHECK(f[3].empty());
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 123456789.125})
        CHECK(csv::parse_number(csv::format_number(v), "v") == v);
    CHECK_THROWS_AS(csv::parse_number("1.5x", "v"), SchemaError);
    CHECK(csv::trim("  x ") == "x");
}

TEST_CASE("simulated panel is deterministic and consistent") {
    const auto cfg = small_config();
    const Panel a = build_panel(cfg);
    const Panel b = build_panel(cfg);
    std::ostringstream sa, sb;
    write_panel_csv(sa, a);
    write_panel_csv(sb, b);
    CHECK(sa.str() == sb.str());
    CHECK(a.locations() == 30);
    CHECK(a.periods() == 80);
    for (std::size_t l = 0; l < a.locations(); ++l)
        for (std::size_t t = 0; t < a.periods(); ++t) {
            const double n = a.at(Var::S, l, t) + a.at(Var::I, l, t) + a.at(Var::R, l, t) + a.at(Var::D, l, t);
            CHECK(n == 1000.0);
            CHECK(a.at(Var::C, l, t) == 1000.0 - a.at(Var::S, l, t));
        }
    auto other = cfg;
    other.root_seed += 1;
    std::ostringstream sc;
    write_panel_csv(sc, build_panel(other));
    CHECK(sc.str() != sa.str());
}

TEST_CASE("null policy counterfactual equals the observed path") {
    const Panel p = build_panel(small_config());
    REQUIRE(p.counterfactual().has_value());
    const auto& cf = *p.counterfactual();
    for (std::size_t l = 0; l < p.locations(); ++l)
        for (std::size_t t = 0; t < p.periods(); ++t)
            if (p.ever_treated(l)) CHECK(cf.c0[l * p.periods() + t] == p.at(Var::C, l, t));
}

TEST_CASE("panel csv round trip") {
    auto cfg = small_config();
    cfg.econ = EconParams{};
    const Panel p = build_panel(cfg);
    std::ostringstream s;
    write_panel_csv(s, p);
    std::istringstream in(s.str());
    const Panel q = read_panel_csv(in);
    CHECK(q.locations() == p.locations());
    CHECK(q.periods() == p.periods());
    CHECK(q.has_outcome());
    std::ostringstream s2;
    write_panel_csv(s2, q);
    CHECK(s2.str() == s.str());
}

TEST_CASE("panel validation rejects groups outside the window") {
    Panel p(2, 5);
    p.set_population(0, 1000);
    p.set_population(1, 1000);
    p.set_group(0, 0);
    CHECK_THROWS_AS(p.validate(), Error);
    p.set_group(0, 3);
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("config parsing") {
    std::istringstream unknown("# comment\nn_locations = 50\nbeta = 0.1\nbeta_typo = 1\n");
    CHECK_THROWS_WITH_AS(parse_config(unknown), doctest::Contains("beta_typo"), ConfigError);

    std::istringstream econ("n_locations = 50\nbeta = 0.1\necon.alpha = -0.2\n");
    const auto c = parse_config(econ);
    CHECK(c.n_locations == 50);
    CHECK(c.sird.beta == 0.1);
    REQUIRE(c.econ.has_value());
    CHECK(c.econ->alpha == -0.2);

    std::istringstream off("econ.alpha = -0.2\necon.enabled = false\n");
    CHECK_FALSE(parse_config(off).econ.has_value());

    std::istringstream bad("beta = fast\n");
    CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains("beta"), ConfigError);

    std::istringstream invalid("lambda = 0.9\ngamma = 0.5\n");
    CHECK_THROWS_AS(parse_config(invalid), ConfigError);

    // write -> parse is the identity
    auto cfg = small_config();
    cfg.econ = EconParams{};
    cfg.adoption_dates = {30, 40};
    cfg.adoption_probs = {0.2, 0.3};
    std::ostringstream w;
    write_config(w, cfg);
    std::istringstream r(w.str());
    const auto back = parse_config(r);
    std::ostringstream w2;
    write_config(w2, back);
    CHECK(w2.str() == w.str());
}

TEST_CASE("staggered adoption assigns the configured groups") {
    auto cfg = small_config();
    cfg.n_locations = 400;
    cfg.adoption_dates = {30, 40};
    cfg.adoption_probs = {0.25, 0.25};
    const Panel p = build_panel(cfg);
    const auto groups = p.adoption_groups();
    CHECK(groups == std::vector<int>{30, 40});
    int never = 0;
    for (std::size_t l = 0; l < p.locations(); ++l) never += p.ever_treated(l) ? 0 : 1;
    CHECK(std::abs(never / 400.0 - 0.5) < 0.1);
}

TEST_CASE("manifest round trip and atomic write") {
    const auto dir = std::filesystem::temp_directory_path() / "epipolicy_manifest_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "run.manifest").string();
    RunManifest m;
    m.set("command", "simulate");
    m.set("config_snapshot", "a = 1\nb = 2\n");
    m.set("command", "estimate");
    write_manifest_atomic(path, m);
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
    const auto back = read_manifest(path);
    REQUIRE(back.get("command"));
    CHECK(*back.get("command") == "estimate");
    CHECK(*back.get("config_snapshot") == "a = 1\nb = 2\n");
    CHECK(back.entries.size() == 2);
    CHECK(back.get("missing") == nullptr);
    std::filesystem::remove_all(dir);
}
