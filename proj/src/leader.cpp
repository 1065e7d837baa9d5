#include "stackel/leader.hpp"

#include <chrono>
#include <cmath>

#include "stackel/errors.hpp"
#include "stackel/routing.hpp"
#include "stackel/schedules.hpp"

namespace stackel {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

struct Evaluation {
    InduceResult ind;
    double objective;
    bool accurate;
};

double resolve_epsilon(double scheduled, const std::optional<double>& floor, bool allow, bool& certified) {
    if (!floor || scheduled >= *floor) return scheduled;
    if (!allow)
        throw ConfigError("schedule asks for induction accuracy " + std::to_string(scheduled) +
                          ", below the configured floor " + std::to_string(*floor) +
                          "; allow uncertified runs to proceed");
    certified = false;
    return *floor;
}

// Copies the loop controls (budget, step, checks) from the user's template onto instance constants.
InduceConfig with_controls(InduceConfig base, const InduceConfig& controls) {
    base.override_T = controls.override_T;
    base.override_eta = controls.override_eta;
    base.check_every = controls.check_every;
    base.t_constant = controls.t_constant;
    base.early_exit = controls.early_exit;
    base.throw_on_budget = false;
    return base;
}

LeaderResult search_targets(Responder& f, const RoundedSet& body, const std::function<Vector(const Vector&)>& target_of,
                            const ZooConfig& zcfg, const std::function<Evaluation(const Vector&)>& eval) {
    LeaderResult res;
    const long q0 = f.queries();
    const auto t0 = std::chrono::steady_clock::now();
    auto map = [&](const Vector& x) { return target_of ? target_of(x) : x; };
    auto record = [&](const Vector& target, const Evaluation& e) {
        res.trace.push_back({long(res.trace.size()), target, e.ind.leader_action, e.ind.induced, e.ind.distance,
                             e.objective, f.queries() - q0,
                             std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()});
        if (!e.accurate) res.certified = false;
    };
    ApproxEvaluator F([&](const Vector& x) {
        const Vector target = map(x);
        Evaluation e = eval(target);
        record(target, e);
        return -e.objective;
    });
    const ZooResult z = minimize(F, body, zcfg);
    res.zoo_queries = F.calls();
    res.target = map(z.x);
    Evaluation fin = eval(res.target);
    record(res.target, fin);
    res.action = fin.ind.leader_action;
    res.induced = fin.ind.induced;
    res.objective = fin.objective;
    res.certified = res.certified && z.certified;
    res.total_follower_queries = f.queries() - q0;
    return res;
}

}  // namespace

double leader_payoff(const LeaderObjective& obj, const Vector& action, const Vector& response) {
    return std::visit(overloaded{
                          [&](const ProfitObjective& o) { return action.dot(response) - o.cost.value(response); },
                          [&](const ProcurementObjective& o) { return (o.values - action).dot(response); },
                          [&](const SocialCostObjective& o) { return -social_cost(*o.game, response); },
                      },
                      obj);
}

long scaled_sample_count(double s, double nu) {
    return std::max<long>(1, static_cast<long>(std::ceil(nu * nu * s)));
}

LeaderResult opro(FollowerOracle& buyer, const CostFunction& cost, const OproConfig& cfg) {
    const Valuation& v = buyer.valuation();
    const int d = v.dim();
    if (cost.dim() != d) throw UsageError("opro: cost and valuation dimensions differ");
    if (buyer.incentive() != Incentive::Charge) throw UsageError("opro: the buyer must pay the posted price");
    const double gamma = buyer.set().diameter();
    const double lv = v.holder_constant(), lc = cost.lipschitz(v.bound()), hb = v.holder_exponent();
    const ProfitSchedule sch = profit_schedule(cfg.alpha, lv, lc, d, gamma, hb);

    bool certified = true;
    const double eps = resolve_epsilon(sch.epsilon, cfg.min_epsilon, cfg.allow_uncertified, certified);
    const double delta = 4.0 * eps;
    if (!(delta < 0.5)) throw ConfigError("opro: induction accuracy too coarse for the interior shrink");
    const FeasibleSet inner = shrink(buyer.set(), delta);
    const RoundedSet body = round_set(inner);

    ZooConfig z = cfg.zoo;
    z.epsilon = d * std::pow(eps, hb) * (lv + lc);
    const InduceConfig ic = with_controls(induce_config_for(buyer, eps), cfg.induce);
    const ProfitObjective obj{cost};

    auto eval = [&](const Vector& target) {
        InduceResult r;
        if (cfg.inducer == Inducer::Ellipsoid) {
            EllipsoidConfig ec;
            ec.epsilon = eps;
            ec.lambda_F = ic.lambda_F;
            ec.gamma = ic.gamma;
            ec.sigma = ic.sigma;
            ec.holder_beta = ic.holder_beta;
            r = learn_price_ellipsoid(buyer, target, ec);
        } else {
            r = learn_price(buyer, buyer.set(), target, ic);
        }
        return Evaluation{r, leader_payoff(obj, r.leader_action, r.induced), r.converged};
    };
    LeaderResult res = search_targets(buyer, body, {}, z, eval);
    res.certified = res.certified && certified;
    res.epsilon = eps;
    return res;
}

LeaderResult learn_opt(StackelbergInstance& inst, const LearnOptConfig& cfg) {
    if (!inst.follower) throw UsageError("learn_opt: no follower");
    const int d = inst.body.dim();
    const OptSchedule sch = general_schedule(cfg.alpha, inst.lambda_L, d);
    bool certified = true;
    const double eps = resolve_epsilon(sch.epsilon, cfg.min_epsilon, cfg.allow_uncertified, certified);
    ZooConfig z = cfg.zoo;
    z.epsilon = d * eps * inst.lambda_L;
    InduceConfig ic = cfg.induce;
    ic.epsilon = eps;
    ic.throw_on_budget = false;

    auto eval = [&](const Vector& target) {
        InduceResult r = cfg.inducer ? cfg.inducer(target, eps) : learn_lead(*inst.follower, target, ic);
        return Evaluation{r, leader_payoff(inst.objective, r.leader_action, r.induced), r.converged};
    };
    LeaderResult res = search_targets(*inst.follower, inst.body, inst.target_of, z, eval);
    res.certified = res.certified && certified;
    res.epsilon = eps;
    return res;
}

LeaderResult opro_noisy(FollowerOracle& agent, const Vector& values, const OproNoisyConfig& cfg) {
    const int d = agent.valuation().dim();
    if (values.size() != d) throw UsageError("opro_noisy: value vector has wrong dimension");
    if (agent.incentive() != Incentive::Reward) throw UsageError("opro_noisy: the agent must be paid by the contract");
    double nu = 1.0;
    if (const auto* n = std::get_if<NoisyMode>(&agent.mode())) nu = n->nu;
    if (cfg.nu) nu = *cfg.nu;

    const double gamma = agent.set().diameter();
    // the failure split depends on the number of optimizer steps, which depends on the accuracy
    const NoisyProfitSchedule pre = noisy_profit_schedule(cfg.alpha, gamma, d, cfg.failure_prob, 1.0);
    const long zoo_steps = cfg.zoo.budget ? *cfg.zoo.budget : default_zoo_budget(d, pre.zoo_alpha);
    const NoisyProfitSchedule sch = noisy_profit_schedule(cfg.alpha, gamma, d, cfg.failure_prob, double(zoo_steps));

    bool certified = true;
    const double eps = resolve_epsilon(sch.epsilon, cfg.min_epsilon, cfg.allow_uncertified, certified);
    const double delta = 2.0 * eps;
    const FeasibleSet inner = shrink(agent.set(), delta);
    const RoundedSet body = round_set(inner);
    ZooConfig z = cfg.zoo;
    z.epsilon = 3.0 * d * eps;
    const long samples = cfg.samples ? *cfg.samples : scaled_sample_count(sch.samples, nu);
    if (samples < 1) throw ConfigError("opro_noisy: sample count must be positive");

    InduceConfig ic = with_controls(induce_config_for(agent, eps), cfg.induce);
    const ProcurementObjective obj{values};
    auto eval = [&](const Vector& target) {
        InduceResult r = learn_price_noisy(agent, target, ic);
        double acc = 0;
        for (long j = 0; j < samples; ++j) acc += leader_payoff(obj, r.leader_action, agent.respond(r.leader_action));
        return Evaluation{r, acc / double(samples), true};
    };
    LeaderResult res = search_targets(agent, body, {}, z, eval);
    res.certified = res.certified && certified;
    res.epsilon = eps;
    return res;
}

}  // namespace stackel
