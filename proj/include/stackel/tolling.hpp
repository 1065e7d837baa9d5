#pragma once

#include "stackel/induce.hpp"
#include "stackel/leader.hpp"
#include "stackel/routing.hpp"

namespace stackel {

// Throws ContractViolation unless the edge flow is nonnegative and conserves each node's net supply.
void check_feasible_flow(const RoutingGame& g, const Vector& edge_flow, double tol = 1e-9);

// Tolls whose equilibrium is within delta of the target edge flow. Tolls live in
// {t >= 0, |t| <= 2m}. Only the loop controls of `controls` are used.
InduceResult enforce_target_flow(EquilibriumOracle& oracle, const Vector& target, double delta,
                                 const InduceConfig& controls = {});

// Lagrangian value min_f Phi(f) + <t, f - target>, evaluated at the equilibrium for t.
double toll_dual_value(const RoutingGame& g, const Vector& tolls, const Vector& target);

// Upper bound on the Lipschitz constant of the social cost in the edge flows.
double social_cost_lipschitz(const RoutingGame& g);

struct TollOptConfig {
    double alpha = 0.02;
    std::optional<double> min_epsilon;
    bool allow_uncertified = false;
    ZooConfig zoo;
    InduceConfig induce;   // loop controls only
};

// Tolls minimizing the social cost of the induced equilibrium, searched over path-flow targets.
LeaderResult optimize_tolls(EquilibriumOracle& oracle, const TollOptConfig& cfg);

}  // namespace stackel
