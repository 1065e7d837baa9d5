#include "stackel/tolling.hpp"

#include <cmath>
#include <memory>

#include "stackel/errors.hpp"
#include "stackel/schedules.hpp"

namespace stackel {

void check_feasible_flow(const RoutingGame& g, const Vector& f, double tol) {
    if (f.size() != g.num_edges()) throw UsageError("flow has wrong length");
    if ((f.array() < -tol).any()) throw ContractViolation("target flow has a negative edge");
    Vector net = Vector::Zero(g.num_nodes());
    for (int e = 0; e < g.num_edges(); ++e) {
        net[g.edges()[e].tail] += f[e];
        net[g.edges()[e].head] -= f[e];
    }
    for (const auto& c : g.commodities()) {
        net[c.source] -= c.demand;
        net[c.sink] += c.demand;
    }
    if (net.lpNorm<Eigen::Infinity>() > tol) throw ContractViolation("target flow violates conservation");
}

InduceResult enforce_target_flow(EquilibriumOracle& oracle, const Vector& target, double delta,
                                 const InduceConfig& controls) {
    const RoutingGame& g = oracle.game();
    check_feasible_flow(g, target);
    const double sigma = g.min_slope();
    if (!(sigma > 0)) throw ModelError("target-flow enforcement needs strictly increasing latencies");
    const int m = g.num_edges();
    const LeadSchedule sch = target_flow_schedule(m, delta, sigma);
    InduceConfig c = controls;
    c.epsilon = delta;
    c.sigma = sigma;
    return dual_descent(oracle, target, sch.radius, resolve_T(c, sch.T), resolve_eta(c, sch.eta), c);
}

double toll_dual_value(const RoutingGame& g, const Vector& tolls, const Vector& target) {
    EquilibriumOptions o;
    o.tol = 1e-9;
    const Vector f = wardrop_equilibrium(g, tolls, o).flow.edge;
    return potential(g, f, Vector::Zero(g.num_edges())) + tolls.dot(f - target);
}

double social_cost_lipschitz(const RoutingGame& g) {
    // d/df [f l(f)] = l(f) + f l'(f), nonnegative and largest somewhere on [0, D]
    const double D = g.total_demand();
    double s = 0;
    for (const auto& e : g.edges()) {
        double m = 0;
        for (int i = 0; i <= 200; ++i) {
            const double x = D * i / 200.0;
            m = std::max(m, std::abs(e.latency.value(x) + x * e.latency.derivative(x)));
        }
        s += m * m;
    }
    return std::sqrt(s);
}

LeaderResult optimize_tolls(EquilibriumOracle& oracle, const TollOptConfig& cfg) {
    const RoutingGame& g = oracle.game();
    std::vector<std::vector<Path>> paths;
    std::vector<std::pair<int, double>> blocks;
    int total = 0;
    for (size_t i = 0; i < g.commodities().size(); ++i) {
        paths.push_back(g.paths(int(i), 16));
        total += int(paths.back().size());
        blocks.push_back({int(paths.back().size()), g.commodities()[i].demand});
    }
    if (total > 16) throw UnsupportedError("toll optimization supports at most 16 paths");

    auto shared = std::make_shared<const RoutingGame>(g);
    StackelbergInstance inst{&oracle, RoundedSet::simplices(blocks),
                             [&](const Vector& z) {
                                 std::vector<std::vector<PathFlow>> pf(paths.size());
                                 int k = 0;
                                 for (size_t i = 0; i < paths.size(); ++i)
                                     for (const auto& p : paths[i]) pf[i].push_back({p, std::max(z[k++], 0.0)});
                                 return edge_flow_of_paths(g, pf);
                             },
                             SocialCostObjective{shared}, social_cost_lipschitz(g)};
    LearnOptConfig lc;
    lc.alpha = cfg.alpha;
    lc.min_epsilon = cfg.min_epsilon;
    lc.allow_uncertified = cfg.allow_uncertified;
    lc.zoo = cfg.zoo;
    lc.induce = cfg.induce;
    lc.inducer = [&](const Vector& target, double eps) {
        InduceConfig c = cfg.induce;
        c.throw_on_budget = false;
        return enforce_target_flow(oracle, target, eps, c);
    };
    return learn_opt(inst, lc);
}

}  // namespace stackel
