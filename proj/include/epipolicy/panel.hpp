#pragma once

// Rectangular locations x periods dataset shared by the simulator, the
// ingestion pipeline and every estimator.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace epipolicy {

enum class Var { S, I, R, D, C, Y };

// Untreated potential paths of treated locations, recorded by the simulator
// from seed-matched reruns without the policy. Only used to compute the true
// ATT in Monte Carlo work; never read by estimators.
struct Counterfactual {
    std::vector<double> c0;
    std::vector<double> i0;
    std::vector<double> y0;
};

class Panel {
public:
    Panel() = default;
    Panel(std::size_t n_locations, std::size_t n_periods);

    std::size_t locations() const noexcept { return n_locations_; }
    std::size_t periods() const noexcept { return n_periods_; }

    double at(Var v, std::size_t loc, std::size_t t) const { return store(v)[loc * n_periods_ + t]; }
    double& at(Var v, std::size_t loc, std::size_t t) { return store(v)[loc * n_periods_ + t]; }
    std::span<const double> series(Var v, std::size_t loc) const {
        return {store(v).data() + loc * n_periods_, n_periods_};
    }

    bool has_outcome() const noexcept { return has_outcome_; }
    void enable_outcome();

    // Adoption period of the location, nullopt for never treated.
    std::optional<int> group(std::size_t loc) const { return group_[loc]; }
    void set_group(std::size_t loc, std::optional<int> g) { group_[loc] = g; }
    bool ever_treated(std::size_t loc) const { return group_[loc].has_value(); }
    // Sorted distinct adoption periods.
    std::vector<int> adoption_groups() const;

    const std::string& id(std::size_t loc) const { return ids_[loc]; }
    void set_id(std::size_t loc, std::string id) { ids_[loc] = std::move(id); }
    double population(std::size_t loc) const { return population_[loc]; }
    void set_population(std::size_t loc, double pop) { population_[loc] = pop; }

    const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }
    std::size_t add_covariate(const std::string& name);
    std::optional<std::size_t> covariate_index(const std::string& name) const;
    double covariate(std::size_t k, std::size_t loc, std::size_t t) const {
        return covariates_[k][loc * n_periods_ + t];
    }
    double& covariate(std::size_t k, std::size_t loc, std::size_t t) {
        return covariates_[k][loc * n_periods_ + t];
    }

    const std::vector<std::string>& period_labels() const noexcept { return period_labels_; }
    void set_period_labels(std::vector<std::string> labels) { period_labels_ = std::move(labels); }

    const std::optional<Counterfactual>& counterfactual() const noexcept { return counterfactual_; }
    std::optional<Counterfactual>& counterfactual() noexcept { return counterfactual_; }

    // Keeps the listed locations, in order.
    Panel subset(std::span<const std::size_t> locations) const;

    // Throws Error when group labels fall outside [1, periods()) or
    // required values are non-finite.
    void validate() const;

private:
    const std::vector<double>& store(Var v) const;
    std::vector<double>& store(Var v);

    std::size_t n_locations_ = 0;
    std::size_t n_periods_ = 0;
    std::vector<std::string> ids_;
    std::vector<std::optional<int>> group_;
    std::vector<double> population_;
    std::vector<double> s_, i_, r_, d_, c_, y_;
    bool has_outcome_ = false;
    std::vector<std::string> covariate_names_;
    std::vector<std::vector<double>> covariates_;
    std::vector<std::string> period_labels_;
    std::optional<Counterfactual> counterfactual_;
};

// Long format: location_id,group,t,S,I,R,D,C,Y,pop[,covariates...]
// group is the adoption period or "never"; Y is empty when absent.
void write_panel_csv(std::ostream& out, const Panel& panel);
Panel read_panel_csv(std::istream& in);

}  // namespace epipolicy
