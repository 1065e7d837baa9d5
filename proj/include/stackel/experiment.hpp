#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stackel/follower.hpp"
#include "stackel/leader.hpp"
#include "stackel/preferences.hpp"
#include "stackel/routing.hpp"

namespace stackel::experiment {

enum class Scenario {
    Pricing,
    PricingEllipsoid,
    StackelbergGeneral,
    RoutingTargetFlow,
    RoutingOptimalTolls,
    PrincipalAgent,
    BraessScan,
};

const char* scenario_name(Scenario s);

struct FollowerSpec {
    std::string mode = "exact";   // exact | approximate | noisy
    double zeta = 0;
    double nu = 0;
    double tol = 1e-8;
};

struct AlgorithmSpec {
    double alpha = 0.02;
    std::optional<double> epsilon;       // induction accuracy / delta for target-only runs
    std::optional<double> min_epsilon;
    std::optional<long> iterations;      // overrides the schedule's T (library default 5000)
    std::optional<double> step;
    long check_every = 50;
    double t_constant = 32;
    Inducer inducer = Inducer::Subgradient;
    ZooMethod zoo_method = ZooMethod::GridRefine;
    std::optional<long> zoo_budget;
    int zoo_grid_points = 5;
    double zoo_resolution = 1e-3;
    double failure_prob = 0.1;
    std::optional<long> samples;
    std::optional<double> lambda_leader;
    double solver_tol = 1e-8;
};

// Everything a run needs, validated. Built by parse_config / load_config.
struct ExperimentConfig {
    Scenario scenario = Scenario::Pricing;
    std::vector<std::uint64_t> seeds{1};
    std::optional<std::string> output;
    bool non_certified_ok = false;
    // Set when the accuracy floor overrides the schedule; run() refuses unless non_certified_ok.
    std::optional<std::string> uncertified_reason;

    std::optional<Valuation> valuation;
    std::optional<Vector> set_lo, set_hi;
    FollowerSpec follower;
    std::optional<CostFunction> cost;
    std::optional<Vector> target;
    std::optional<Vector> values;
    std::optional<RoutingGame> game;
    std::vector<std::pair<double, double>> braess_points;
    AlgorithmSpec algorithm;
};

// Parses the sectioned key = value format. Errors are ConfigError("<origin>:<line>: ...").
// Relative file references resolve against base_dir. force_non_certified acts like
// non_certified_ok = true in the file.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config",
                              const std::filesystem::path& base_dir = ".", bool force_non_certified = false);
ExperimentConfig load_config(const std::filesystem::path& path, bool force_non_certified = false);

inline const char* csv_header() {
    return "scenario,seed,iteration,leader_action_norm,distance_to_target,objective_value,cumulative_queries,"
           "wall_clock_ms";
}

// 12 significant digits, locale independent.
std::string format_number(double x);

struct CellResult {
    std::uint64_t seed = 0;
    std::string status = "ok";   // ok | failed | config_error
    std::string error;
    std::string csv;              // header plus rows, ending in a marker row on failure
    nlohmann::json summary;
    double wall_ms = 0;
};

CellResult run_cell(const ExperimentConfig& cfg, std::uint64_t seed);

struct RunOptions {
    std::filesystem::path out_dir;
    int jobs = 1;
};

// Runs every seed, writes one CSV per cell and summary.json. Returns 0 when all cells completed,
// 1 on a solver failure, 2 when a cell hit a configuration error.
int run(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log);

// Replays the follower (or equilibrium) at a fixed leader action.
nlohmann::json verify(const ExperimentConfig& cfg, const Vector& action);

// Writes through a temporary file in the same directory and renames it into place.
void write_atomically(const std::filesystem::path& path, const std::string& contents);

}  // namespace stackel::experiment
