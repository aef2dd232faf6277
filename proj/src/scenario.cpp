#include "epipolicy/scenario.hpp"

#include "epipolicy/csv.hpp"
#include "epipolicy/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace epipolicy {

void EconParams::validate() const {
    if (!(noise_sd >= 0.0)) throw ParameterError("econ noise_sd must be nonnegative");
    if (!(xi_sd >= 0.0)) throw ParameterError("econ xi_sd must be nonnegative");
}

std::int64_t ScenarioConfig::earliest_adoption() const {
    if (adoption_dates.empty()) return policy_time;
    return *std::min_element(adoption_dates.begin(), adoption_dates.end());
}

void ScenarioConfig::validate() const {
    sird.validate();
    if (n_locations < 1) throw ParameterError("n_locations must be at least 1");
    if (t_total < 2) throw ParameterError("t_total must be at least 2");
    if (initial_cases < 0 || initial_cases > sird.n) throw SeedingError("initial_cases must lie in [0, population]");
    if (!(post_policy_beta >= 0.0)) throw ParameterError("post_policy_beta must be nonnegative");
    if (!(lambda_d >= 0.0) || !(lambda_u >= 0.0)) throw ParameterError("first-case means must be nonnegative");
    if (lambda_d >= static_cast<double>(t_total) || lambda_u >= static_cast<double>(t_total))
        throw ParameterError("first-case means must be below t_total");
    if (adoption_dates.empty()) {
        if (!(treat_prob > 0.0 && treat_prob < 1.0)) throw ParameterError("treat_prob must lie in (0, 1)");
        if (policy_time <= 1 || policy_time > t_total) throw ParameterError("policy_time must lie in (1, t_total]");
    } else {
        if (adoption_probs.size() != adoption_dates.size())
            throw ParameterError("adoption_dates and adoption_probs differ in length");
        double total = 0.0;
        for (std::size_t k = 0; k < adoption_dates.size(); ++k) {
            if (adoption_dates[k] <= 1 || adoption_dates[k] > t_total)
                throw ParameterError("adoption dates must lie in (1, t_total]");
            if (!(adoption_probs[k] > 0.0)) throw ParameterError("adoption probabilities must be positive");
            total += adoption_probs[k];
        }
        if (!(total < 1.0 + 1e-12)) throw ParameterError("adoption probabilities must sum to at most 1");
    }
    if (econ) econ->validate();
}

std::vector<std::uint8_t> assign_treatment(const ScenarioConfig& config, Rng& rng) {
    if (!(config.treat_prob > 0.0 && config.treat_prob < 1.0))
        throw ParameterError("treat_prob must lie in (0, 1)");
    std::bernoulli_distribution coin(config.treat_prob);
    std::vector<std::uint8_t> flags(static_cast<std::size_t>(config.n_locations));
    for (auto& f : flags) f = coin(rng) ? 1 : 0;
    return flags;
}

std::int64_t draw_first_case_time(bool treated, const ScenarioConfig& config, Rng& rng) {
    const double mean = treated ? config.lambda_d : config.lambda_u;
    std::int64_t draw = 0;
    if (mean > 0.0) {
        std::poisson_distribution<std::int64_t> poisson(mean);
        draw = poisson(rng);
    }
    return std::clamp<std::int64_t>(draw, 0, config.earliest_adoption() - 1);
}

std::vector<double> economic_outcome_path(std::span<const double> active_cases, bool treated,
                                          const EconParams& econ, Rng& rng,
                                          std::optional<std::int64_t> adoption) {
    const auto T = static_cast<std::int64_t>(active_cases.size());
    std::normal_distribution<double> std_normal(0.0, 1.0);
    const double xi = (treated ? econ.xi_mean_treated : econ.xi_mean_untreated) + econ.xi_sd * std_normal(rng);
    std::vector<double> y(active_cases.size());
    for (std::int64_t t = 0; t < T; ++t) {
        const double v = econ.noise_sd * std_normal(rng);
        double value = econ.tau(t, T) + xi + econ.alpha * active_cases[static_cast<std::size_t>(t)] + v;
        if (treated && adoption && t >= *adoption) value += econ.direct_effect;
        y[static_cast<std::size_t>(t)] = value;
    }
    return y;
}

namespace {

std::vector<std::optional<int>> draw_groups(const ScenarioConfig& config) {
    Rng rng = make_stream(config.root_seed, StreamTag::Assignment);
    const auto n = static_cast<std::size_t>(config.n_locations);
    std::vector<std::optional<int>> groups(n);
    if (config.adoption_dates.empty()) {
        const auto flags = assign_treatment(config, rng);
        for (std::size_t l = 0; l < n; ++l)
            if (flags[l]) groups[l] = static_cast<int>(config.policy_time);
        return groups;
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t l = 0; l < n; ++l) {
        const double u = unif(rng);
        double acc = 0.0;
        for (std::size_t k = 0; k < config.adoption_dates.size(); ++k) {
            acc += config.adoption_probs[k];
            if (u < acc) {
                groups[l] = static_cast<int>(config.adoption_dates[k]);
                break;
            }
        }
    }
    return groups;
}

}  // namespace

Panel build_panel(const ScenarioConfig& config) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.n_locations);
    const auto T = static_cast<std::size_t>(config.t_total);
    const auto groups = draw_groups(config);

    Panel panel(n, T);
    if (config.econ) panel.enable_outcome();
    Counterfactual cf;
    cf.c0.assign(n * T, 0.0);
    cf.i0.assign(n * T, 0.0);
    if (config.econ) cf.y0.assign(n * T, 0.0);

    std::vector<double> active(T);
    std::vector<double> active0(T);
    for (std::size_t l = 0; l < n; ++l) {
        const bool treated = groups[l].has_value();
        panel.set_group(l, groups[l]);
        panel.set_population(l, static_cast<double>(config.sird.n));

        Rng timing = make_stream(config.root_seed, StreamTag::FirstCase, l);
        PathOptions opt;
        opt.t_total = config.t_total;
        opt.first_case_time = draw_first_case_time(treated, config, timing);
        opt.initial_cases = config.initial_cases;

        const bool policy_changes_path = treated && config.post_policy_beta != config.sird.beta;
        Rng path_rng = make_stream(config.root_seed, StreamTag::Path, l);
        SirdPath untreated_path;
        if (treated) {
            opt.policy_time = *groups[l];
            opt.post_policy_beta = config.post_policy_beta;
        }
        const SirdPath path = simulate_path(config.sird, opt, path_rng);
        if (policy_changes_path) {
            PathOptions no_policy = opt;
            no_policy.policy_time.reset();
            no_policy.post_policy_beta.reset();
            Rng matched = make_stream(config.root_seed, StreamTag::Path, l);
            untreated_path = simulate_path(config.sird, no_policy, matched);
        }
        const SirdPath& path0 = policy_changes_path ? untreated_path : path;

        for (std::size_t t = 0; t < T; ++t) {
            const auto& st = path.states[t];
            panel.at(Var::S, l, t) = static_cast<double>(st.s);
            panel.at(Var::I, l, t) = static_cast<double>(st.i);
            panel.at(Var::R, l, t) = static_cast<double>(st.r);
            panel.at(Var::D, l, t) = static_cast<double>(st.d);
            panel.at(Var::C, l, t) = static_cast<double>(st.c);
            active[t] = static_cast<double>(st.i);
            active0[t] = static_cast<double>(path0.states[t].i);
            cf.c0[l * T + t] = static_cast<double>(path0.states[t].c);
            cf.i0[l * T + t] = active0[t];
        }

        if (config.econ) {
            // The potential outcome without the policy reuses the same fixed
            // effect and shocks, so both draws come from one stream position.
            Rng econ_rng = make_stream(config.root_seed, StreamTag::Econ, l);
            Rng econ_rng0 = econ_rng;
            const std::optional<std::int64_t> adoption =
                groups[l] ? std::optional<std::int64_t>(*groups[l]) : std::nullopt;
            const auto y = economic_outcome_path(active, treated, *config.econ, econ_rng, adoption);
            EconParams no_direct = *config.econ;
            no_direct.direct_effect = 0.0;
            const auto y0 = economic_outcome_path(active0, treated, no_direct, econ_rng0, std::nullopt);
            for (std::size_t t = 0; t < T; ++t) {
                panel.at(Var::Y, l, t) = y[t];
                cf.y0[l * T + t] = y0[t];
            }
        }
    }
    panel.counterfactual() = std::move(cf);
    return panel;
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

template <class T>
T parse_value(const std::string& text, const std::string& key, std::size_t line) {
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError("config line " + std::to_string(line) + ": key '" + key + "' has invalid value '" + text +
                          "'");
    return v;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& key, std::size_t line) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_value<T>(csv::trim(item), key, line));
    return out;
}

bool parse_bool(const std::string& text, const std::string& key, std::size_t line) {
    const auto t = lower(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError("config line " + std::to_string(line) + ": key '" + key + "' expects true/false, got '" +
                      text + "'");
}

}  // namespace

ScenarioConfig parse_config(std::istream& in) {
    ScenarioConfig cfg;
    EconParams econ;
    std::optional<bool> econ_enabled;
    bool econ_touched = false;

    using Setter = std::function<void(const std::string&, const std::string&, std::size_t)>;
    const std::map<std::string, Setter> setters = {
        {"n_locations", [&](auto& v, auto& k, auto l) { cfg.n_locations = parse_value<std::int64_t>(v, k, l); }},
        {"beta", [&](auto& v, auto& k, auto l) { cfg.sird.beta = parse_value<double>(v, k, l); }},
        {"lambda", [&](auto& v, auto& k, auto l) { cfg.sird.lambda = parse_value<double>(v, k, l); }},
        {"gamma", [&](auto& v, auto& k, auto l) { cfg.sird.gamma = parse_value<double>(v, k, l); }},
        {"population", [&](auto& v, auto& k, auto l) { cfg.sird.n = parse_value<std::int64_t>(v, k, l); }},
        {"t_total", [&](auto& v, auto& k, auto l) { cfg.t_total = parse_value<std::int64_t>(v, k, l); }},
        {"treat_prob", [&](auto& v, auto& k, auto l) { cfg.treat_prob = parse_value<double>(v, k, l); }},
        {"policy_time", [&](auto& v, auto& k, auto l) { cfg.policy_time = parse_value<std::int64_t>(v, k, l); }},
        {"post_policy_beta", [&](auto& v, auto& k, auto l) { cfg.post_policy_beta = parse_value<double>(v, k, l); }},
        {"lambda_d", [&](auto& v, auto& k, auto l) { cfg.lambda_d = parse_value<double>(v, k, l); }},
        {"lambda_u", [&](auto& v, auto& k, auto l) { cfg.lambda_u = parse_value<double>(v, k, l); }},
        {"initial_cases", [&](auto& v, auto& k, auto l) { cfg.initial_cases = parse_value<std::int64_t>(v, k, l); }},
        {"root_seed", [&](auto& v, auto& k, auto l) { cfg.root_seed = parse_value<std::uint64_t>(v, k, l); }},
        {"adoption_dates",
         [&](auto& v, auto& k, auto l) { cfg.adoption_dates = parse_list<std::int64_t>(v, k, l); }},
        {"adoption_probs", [&](auto& v, auto& k, auto l) { cfg.adoption_probs = parse_list<double>(v, k, l); }},
        {"econ.enabled", [&](auto& v, auto& k, auto l) { econ_enabled = parse_bool(v, k, l); }},
        {"econ.alpha", [&](auto& v, auto& k, auto l) { econ.alpha = parse_value<double>(v, k, l); econ_touched = true; }},
        {"econ.tau_intercept",
         [&](auto& v, auto& k, auto l) { econ.tau_intercept = parse_value<double>(v, k, l); econ_touched = true; }},
        {"econ.tau_slope",
         [&](auto& v, auto& k, auto l) { econ.tau_slope = parse_value<double>(v, k, l); econ_touched = true; }},
        {"econ.xi_mean_treated",
         [&](auto& v, auto& k, auto l) { econ.xi_mean_treated = parse_value<double>(v, k, l); econ_touched = true; }},
        {"econ.xi_mean_untreated",
         [&](auto& v, auto& k, auto l) { econ.xi_mean_untreated = parse_value<double>(v, k, l); econ_touched = true; }},
        {"econ.xi_sd", [&](auto& v, auto& k, auto l) { econ.xi_sd = parse_value<double>(v, k, l); econ_touched = true; }},
        {"econ.noise_sd",
         [&](auto& v, auto& k, auto l) { econ.noise_sd = parse_value<double>(v, k, l); econ_touched = true; }},
        {"econ.direct_effect",
         [&](auto& v, auto& k, auto l) { econ.direct_effect = parse_value<double>(v, k, l); econ_touched = true; }},
    };

    std::string line;
    std::size_t line_no = 0;
    while (csv::read_line(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string body = csv::trim(line.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value', got '" + body + "'");
        const std::string key = csv::trim(body.substr(0, eq));
        const std::string value = csv::trim(body.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        it->second(value, key, line_no);
    }
    if (econ_enabled.value_or(econ_touched)) cfg.econ = econ;
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    return parse_config(in);
}

void write_config(std::ostream& out, const ScenarioConfig& c) {
    auto num = [](double v) { return csv::format_number(v); };
    out << "n_locations = " << c.n_locations << '\n'
        << "beta = " << num(c.sird.beta) << '\n'
        << "lambda = " << num(c.sird.lambda) << '\n'
        << "gamma = " << num(c.sird.gamma) << '\n'
        << "population = " << c.sird.n << '\n'
        << "t_total = " << c.t_total << '\n'
        << "treat_prob = " << num(c.treat_prob) << '\n'
        << "policy_time = " << c.policy_time << '\n'
        << "post_policy_beta = " << num(c.post_policy_beta) << '\n'
        << "lambda_d = " << num(c.lambda_d) << '\n'
        << "lambda_u = " << num(c.lambda_u) << '\n'
        << "initial_cases = " << c.initial_cases << '\n'
        << "root_seed = " << c.root_seed << '\n';
    if (!c.adoption_dates.empty()) {
        out << "adoption_dates = ";
        for (std::size_t k = 0; k < c.adoption_dates.size(); ++k) out << (k ? "," : "") << c.adoption_dates[k];
        out << "\nadoption_probs = ";
        for (std::size_t k = 0; k < c.adoption_probs.size(); ++k) out << (k ? "," : "") << num(c.adoption_probs[k]);
        out << '\n';
    }
    if (c.econ) {
        const auto& e = *c.econ;
        out << "econ.enabled = true\n"
            << "econ.alpha = " << num(e.alpha) << '\n'
            << "econ.tau_intercept = " << num(e.tau_intercept) << '\n'
            << "econ.tau_slope = " << num(e.tau_slope) << '\n'
            << "econ.xi_mean_treated = " << num(e.xi_mean_treated) << '\n'
            << "econ.xi_mean_untreated = " << num(e.xi_mean_untreated) << '\n'
            << "econ.xi_sd = " << num(e.xi_sd) << '\n'
            << "econ.noise_sd = " << num(e.noise_sd) << '\n'
            << "econ.direct_effect = " << num(e.direct_effect) << '\n';
    }
}

}  // namespace epipolicy
