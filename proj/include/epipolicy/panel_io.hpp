#pragma once

// Ingestion of observed location-by-day data: schema mapping, per-million
// scaling, active cases over a trailing window, adoption groups from policy
// dates, and conversion to the shared Panel layout.

#include "epipolicy/panel.hpp"

#include <chrono>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace epipolicy {

// Input column names. Empty optional columns are treated as absent.
struct SchemaMapping {
    std::string location = "location";
    std::string date = "date";
    std::string cum_cases = "cum_cases";
    std::string population = "population";
    std::string cum_tests = "cum_tests";     // optional
    std::string outcome = "outcome";         // optional
    std::string region = "region";           // optional
    std::string policy_date = "policy_date"; // optional; blank cell = never adopted
};

struct RawRow {
    std::string location;
    std::chrono::sys_days date{};
    double cum_cases = 0.0;
    double population = 0.0;
    std::optional<double> cum_tests;
    std::optional<double> outcome;
    std::string region;
    std::optional<std::chrono::sys_days> policy_date;
};

struct RawSeries {
    std::vector<RawRow> rows;            // sorted by location, then date
    bool per_million = false;
    bool has_tests = false;
    bool has_outcome = false;
    bool has_region = false;
    bool has_policy = false;

    std::vector<std::string> locations() const;
};

std::chrono::sys_days parse_date(const std::string& text);
std::string format_date(std::chrono::sys_days d);

// Missing required column -> SchemaError naming it; missing days inside a
// location's span or differing spans -> GapError listing (location, date).
RawSeries read_raw_csv(std::istream& in, const SchemaMapping& mapping = {});
RawSeries load_panel_csv(const std::string& path, const SchemaMapping& mapping = {});
void write_raw_csv(std::ostream& out, const RawSeries& series, const SchemaMapping& mapping = {});

// Cases and tests per million residents. Throws ParameterError on input that
// is already normalized or has a nonpositive population.
RawSeries per_million(const RawSeries& series);

struct ActiveCases {
    std::vector<double> active;
    int clamped = 0;                     // negative daily increments set to 0
};

// I_t = C'_t - C'_{t-window} with C' the running sum of nonnegative daily
// increments and C' = 0 before the first day.
ActiveCases active_cases(std::span<const double> cumulative, int window);

struct GroupBins {
    std::chrono::sys_days anchor{};
    int window = 5;
    std::map<std::string, std::optional<int>> bin;   // location -> bin index, nullopt = never
    std::vector<std::chrono::sys_days> bin_start;      // indexed by bin
};

// Half-open bins [anchor + k w, anchor + (k+1) w). The anchor defaults to the
// earliest adoption date.
GroupBins assign_groups(const std::vector<std::pair<std::string, std::optional<std::chrono::sys_days>>>& adoptions,
                        int window, std::optional<std::chrono::sys_days> anchor = std::nullopt);

struct IngestOptions {
    int active_window = 5;
    int group_window = 5;
    std::optional<std::chrono::sys_days> anchor;
    bool normalize = true;               // per-million scaling
};

struct IngestResult {
    Panel panel;
    GroupBins bins;
    std::map<std::string, int> clamped_increments;   // per location
};

// Panel with S = scale - C, I = active cases, R = C - I, D = 0; group = period
// index of the location's bin start. Tests per million and region dummies
// become covariates "tests" and "region_<name>" (first region is the base).
IngestResult raw_to_panel(const RawSeries& series, const IngestOptions& options = {});

}  // namespace epipolicy
