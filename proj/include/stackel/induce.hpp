#pragma once

#include <optional>
#include <vector>

#include "stackel/follower.hpp"
#include "stackel/geometry.hpp"

namespace stackel {

struct InduceConfig {
    double epsilon = 1e-2;
    double lambda_F = 1.0;     // coupling / Hoelder constant of the follower's objective
    double gamma = 1.0;        // diameter of the follower's action set
    double sigma = 1.0;        // strong concavity of the follower's objective
    double holder_beta = 1.0;
    double zeta = 0.0;         // follower's utility slack
    double t_constant = 32.0;
    // Iteration budget. Unset means the worst-case count from the schedule.
    std::optional<long> override_T = 5000;
    // Unset: the schedule's step when T is not overridden, otherwise sigma. The dual objective is
    // (1/sigma)-smooth, so sigma is always a stable step.
    std::optional<double> override_eta;
    int check_every = 50;       // averaged-price verification period (one extra query each)
    bool early_exit = true;
    bool throw_on_budget = true;
};

// One row per follower query, in order.
struct TraceRow {
    long iter;
    Vector action;
    Vector response;
    double distance;
    double wall_ms = 0;   // since the loop started
};

struct InduceResult {
    Vector leader_action;
    Vector induced;
    double distance = 0;
    long queries = 0;
    long iterations = 0;
    bool converged = false;
    Vector best_action;         // best single iterate, logged for diagnostics
    double best_distance = 0;
    double T = 0;
    double eta = 0;
    std::vector<TraceRow> trace;
};

// Learn a price p with x*(p) within epsilon of the target, by projected subgradient descent on the
// Lagrangian dual. Prices live in {p >= 0, |p| <= sqrt(d) L}.
InduceResult learn_price(Responder& follower, const FeasibleSet& follower_set, const Vector& target,
                         const InduceConfig& cfg);

// Same loop with Lipschitz coupling lambda_F (no Hoelder blow-up) and a zeta-approximate follower.
InduceResult learn_lead(Responder& follower, const Vector& target, const InduceConfig& cfg);

// Variant for noisy responses: no early exit, prices in the ball of radius sqrt(d).
InduceResult learn_price_noisy(Responder& follower, const Vector& target, const InduceConfig& cfg);

// The shared loop: projected subgradient steps on {p >= 0, |p| <= radius} from p = 0, returning the
// averaged action. T and eta are the resolved values (see resolve_T / resolve_eta).
InduceResult dual_descent(Responder& follower, const Vector& target, double radius, double T, double eta,
                          const InduceConfig& cfg);
double resolve_T(const InduceConfig& cfg, double schedule_T);
double resolve_eta(const InduceConfig& cfg, double schedule_eta);

// Fills lambda_F, gamma, sigma, holder_beta from the follower's valuation and set.
InduceConfig induce_config_for(const FollowerOracle& f, double epsilon);

struct Ellipsoid {
    Vector center;
    Matrix shape;   // E = {x : (x-c)^T A^{-1} (x-c) <= 1}
};

// Minimum-volume ellipsoid containing E intersected with {x : <w, x - c> <= 0}.
Ellipsoid ellipsoid_step(const Ellipsoid& e, const Vector& w);

struct EllipsoidConfig {
    double epsilon = 1e-2;
    double lambda_F = 1.0;
    double gamma = 1.0;
    double sigma = 1.0;
    double holder_beta = 1.0;
    std::optional<long> override_T;
    double max_condition = 1e12;
};

InduceResult learn_price_ellipsoid(Responder& follower, const Vector& target, const EllipsoidConfig& cfg);

// Tolls on m edges, toll set {t >= 0, |t| <= m}.
InduceResult learn_toll_ellipsoid(Responder& follower, const Vector& target, const EllipsoidConfig& cfg);

}  // namespace stackel
