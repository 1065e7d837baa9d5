#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "stackel/follower.hpp"
#include "stackel/induce.hpp"
#include "stackel/preferences.hpp"
#include "stackel/zoo.hpp"

namespace stackel {

class RoutingGame;

// Seller revenue minus production cost: <p, x> - c(x).
struct ProfitObjective {
    CostFunction cost;
};

// Principal's expected payoff from a contract: <values - p, x>.
struct ProcurementObjective {
    Vector values;
};

// Negated total latency of the induced flow.
struct SocialCostObjective {
    std::shared_ptr<const RoutingGame> game;
};

using LeaderObjective = std::variant<ProfitObjective, ProcurementObjective, SocialCostObjective>;

// Leader's payoff from an action and the follower's observed reply.
double leader_payoff(const LeaderObjective& obj, const Vector& action, const Vector& response);

struct LeaderTraceRow {
    long query;
    Vector target;
    Vector action;
    Vector induced;
    double distance;
    double objective;
    long cumulative_queries;
    double wall_ms = 0;
};

struct LeaderResult {
    Vector action;
    Vector induced;
    Vector target;
    double objective = 0;
    long total_follower_queries = 0;
    long zoo_queries = 0;
    bool certified = true;
    double epsilon = 0;   // induction accuracy actually used
    std::vector<LeaderTraceRow> trace;
};

enum class Inducer { Subgradient, Ellipsoid };

struct OproConfig {
    double alpha = 0.02;
    // Lower bound on the per-query induction accuracy. When the schedule asks for less, this value
    // is used instead and the result is not certified.
    std::optional<double> min_epsilon;
    bool allow_uncertified = false;
    Inducer inducer = Inducer::Subgradient;
    ZooConfig zoo;           // epsilon is overwritten by the schedule
    InduceConfig induce;     // epsilon and instance constants are overwritten
};

// Profit maximization against a buyer with unknown homogeneous valuation.
LeaderResult opro(FollowerOracle& buyer, const CostFunction& cost, const OproConfig& cfg);

struct StackelbergInstance {
    Responder* follower;
    RoundedSet body;                                  // follower actions the leader may target
    std::function<Vector(const Vector&)> target_of;   // body coordinates -> follower response; identity if empty
    LeaderObjective objective;
    double lambda_L;                                   // Lipschitz constant of the objective in the response
};

struct LearnOptConfig {
    double alpha = 0.02;
    std::optional<double> min_epsilon;
    bool allow_uncertified = false;
    ZooConfig zoo;
    InduceConfig induce;   // lambda_F, gamma, sigma must describe the follower
    // Replaces the default induction step (learn_lead) when set; gets (target, epsilon).
    std::function<InduceResult(const Vector&, double)> inducer;
};

LeaderResult learn_opt(StackelbergInstance& inst, const LearnOptConfig& cfg);

struct OproNoisyConfig {
    double alpha = 0.05;
    double failure_prob = 0.1;
    std::optional<double> min_epsilon;
    bool allow_uncertified = false;
    // Noise level assumed when sizing the sample average; defaults to the follower's nu.
    std::optional<double> nu;
    std::optional<long> samples;   // overrides the derived per-evaluation sample count
    ZooConfig zoo;
    InduceConfig induce;
};

// Contract design against a noisy agent: the agent is a Reward-type follower.
LeaderResult opro_noisy(FollowerOracle& agent, const Vector& values, const OproNoisyConfig& cfg);

// Per-evaluation sample count actually used: ceil(nu^2 s), at least 1.
long scaled_sample_count(double s, double nu);

}  // namespace stackel
