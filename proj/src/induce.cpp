#include "stackel/induce.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "stackel/errors.hpp"
#include "stackel/schedules.hpp"

namespace stackel {

namespace {

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct LoopParams {
    double radius;
    double T;
    double eta;
    bool early_exit;
    bool throw_on_budget;
    int check_every;
    double epsilon;
};

void check_config(const InduceConfig& cfg) {
    if (!(cfg.epsilon > 0)) throw ConfigError("epsilon must be positive");
    if (cfg.zeta < 0) throw ConfigError("zeta must be nonnegative");
    if (cfg.override_T && *cfg.override_T <= 0) throw ConfigError("iteration budget must be positive");
    if (cfg.override_eta && !(*cfg.override_eta > 0)) throw ConfigError("step size must be positive");
    if (cfg.check_every <= 0) throw ConfigError("check period must be positive");
}

// Projected subgradient loop on the dual. Charge: p <- P[p - eta (xhat - x)]; Reward flips the sign.
InduceResult dual_loop(Responder& f, const Vector& target, const LoopParams& lp) {
    const int d = f.action_dim();
    const FeasibleSet P = FeasibleSet::nonneg_ball(d, lp.radius);
    const double s = incentive_sign(f.incentive());
    const long T = static_cast<long>(lp.T);
    if (T <= 0) throw ConfigError("iteration budget must be positive");

    InduceResult r;
    r.T = lp.T;
    r.eta = lp.eta;
    r.best_distance = std::numeric_limits<double>::infinity();
    const long q0 = f.queries();
    const auto t0 = Clock::now();

    Vector p = Vector::Zero(d);
    Vector sum = Vector::Zero(d);
    for (long t = 1; t <= T; ++t) {
        Vector x = f.respond(p);
        const double dist = (target - x).norm();
        if (dist < r.best_distance) {
            r.best_distance = dist;
            r.best_action = p;
        }
        r.trace.push_back({t, p, x, dist, since(t0)});
        sum += p;
        r.iterations = t;
        // an observed response inside the ball is its own certificate
        if (lp.early_exit && dist <= lp.epsilon) {
            r.leader_action = p;
            r.induced = x;
            r.distance = dist;
            r.converged = true;
            r.queries = f.queries() - q0;
            return r;
        }
        p = project(P, p - s * lp.eta * (target - x));

        if (lp.early_exit && t % lp.check_every == 0 && t < T) {
            Vector avg = sum / double(t);
            Vector xa = f.respond(avg);
            const double da = (target - xa).norm();
            r.trace.push_back({t, avg, xa, da, since(t0)});
            if (da <= lp.epsilon) {
                r.leader_action = avg;
                r.induced = xa;
                r.distance = da;
                r.converged = true;
                r.queries = f.queries() - q0;
                return r;
            }
        }
    }
    r.leader_action = sum / double(T);
    r.induced = f.respond(r.leader_action);
    r.distance = (target - r.induced).norm();
    r.trace.push_back({T, r.leader_action, r.induced, r.distance, since(t0)});
    r.converged = r.distance <= lp.epsilon;
    r.queries = f.queries() - q0;
    if (lp.early_exit && !r.converged && lp.throw_on_budget)
        throw BudgetExhausted("iteration budget of " + std::to_string(T) +
                                  " exhausted; achieved distance " + std::to_string(r.distance),
                              r.distance);
    return r;
}

}  // namespace

double resolve_eta(const InduceConfig& cfg, double schedule_eta) {
    if (cfg.override_eta) return *cfg.override_eta;
    if (cfg.override_T) return cfg.sigma;
    return schedule_eta;
}

double resolve_T(const InduceConfig& cfg, double schedule_T) {
    return cfg.override_T ? double(*cfg.override_T) : std::ceil(schedule_T);
}

InduceResult dual_descent(Responder& follower, const Vector& target, double radius, double T, double eta,
                          const InduceConfig& cfg) {
    check_config(cfg);
    if (target.size() != follower.response_dim()) throw UsageError("dual_descent: target dimension mismatch");
    return dual_loop(follower, target,
                     {radius, T, eta, cfg.early_exit, cfg.throw_on_budget, cfg.check_every, cfg.epsilon});
}

InduceConfig induce_config_for(const FollowerOracle& f, double epsilon) {
    InduceConfig c;
    c.epsilon = epsilon;
    c.lambda_F = f.valuation().holder_constant();
    c.holder_beta = f.valuation().holder_exponent();
    c.sigma = f.valuation().strong_concavity();
    c.gamma = f.set().diameter();
    if (const auto* a = std::get_if<ApproximateMode>(&f.mode())) c.zeta = a->zeta;
    return c;
}

InduceResult learn_price(Responder& follower, const FeasibleSet& follower_set, const Vector& target,
                         const InduceConfig& cfg) {
    check_config(cfg);
    if (target.size() != follower.response_dim()) throw UsageError("learn_price: target dimension mismatch");
    if (!contains(follower_set, target, 1e-9))
        throw ContractViolation("learn_price: target lies outside the follower's action set");
    if (cfg.zeta > 0 && !(cfg.epsilon > 2.0 * std::sqrt(2.0 * cfg.zeta / cfg.sigma)))
        throw ConfigError("learn_price: epsilon must exceed 2 sqrt(2 zeta / sigma)");
    const int d = follower.action_dim();
    const auto sch = learn_price_schedule(d, cfg.lambda_F, cfg.holder_beta, cfg.gamma, cfg.epsilon, cfg.sigma,
                                          cfg.t_constant);
    return dual_loop(follower, target,
                     {sch.price_radius, resolve_T(cfg, sch.T), resolve_eta(cfg, sch.eta), cfg.early_exit,
                      cfg.throw_on_budget, cfg.check_every, cfg.epsilon});
}

InduceResult learn_lead(Responder& follower, const Vector& target, const InduceConfig& cfg) {
    check_config(cfg);
    if (target.size() != follower.response_dim()) throw UsageError("learn_lead: target dimension mismatch");
    const int d = follower.action_dim();
    const auto sch = learn_lead_schedule(d, cfg.lambda_F, cfg.gamma, cfg.epsilon, cfg.sigma, cfg.zeta);
    return dual_loop(follower, target,
                     {sch.radius, resolve_T(cfg, sch.T), resolve_eta(cfg, sch.eta), cfg.early_exit,
                      cfg.throw_on_budget, cfg.check_every, cfg.epsilon});
}

InduceResult learn_price_noisy(Responder& follower, const Vector& target, const InduceConfig& cfg) {
    check_config(cfg);
    if (target.size() != follower.response_dim()) throw UsageError("learn_price_noisy: target dimension mismatch");
    const int d = follower.action_dim();
    const auto sch = learn_price_noisy_schedule(d, cfg.gamma, cfg.epsilon, cfg.sigma, cfg.t_constant);
    // Distances measured on noisy responses say little, so the loop always runs to T.
    return dual_loop(follower, target,
                     {sch.radius, resolve_T(cfg, sch.T), resolve_eta(cfg, sch.eta), false, false,
                      cfg.check_every, cfg.epsilon});
}

Ellipsoid ellipsoid_step(const Ellipsoid& e, const Vector& w) {
    const long d = e.center.size();
    if (w.size() != d) throw UsageError("ellipsoid_step: dimension mismatch");
    const double wAw = w.dot(e.shape * w);
    if (!(wAw > 0)) throw UsageError("ellipsoid_step: cut direction must be nonzero");
    const Vector b = e.shape * w / std::sqrt(wAw);
    Ellipsoid out;
    out.center = e.center - b / double(d + 1);
    if (d == 1) {
        // interval halving
        out.shape = e.shape / 4.0;
        return out;
    }
    const double dd = double(d) * double(d);
    out.shape = dd / (dd - 1.0) * (e.shape - 2.0 / double(d + 1) * b * b.transpose());
    out.shape = 0.5 * (out.shape + out.shape.transpose());
    return out;
}

namespace {

InduceResult ellipsoid_loop(Responder& f, const Vector& target, double radius, double T_real, double epsilon,
                            double max_condition) {
    const int d = f.action_dim();
    const FeasibleSet P = FeasibleSet::nonneg_ball(d, radius);
    const double s = incentive_sign(f.incentive());
    const long T = static_cast<long>(std::ceil(T_real));
    if (T <= 0) throw ConfigError("ellipsoid: iteration budget must be positive");

    Ellipsoid e{Vector::Zero(d), radius * radius * Matrix::Identity(d, d)};
    InduceResult r;
    r.T = T;
    r.best_distance = std::numeric_limits<double>::infinity();
    const long q0 = f.queries();
    const auto t0 = Clock::now();
    for (long t = 1; t <= T; ++t) {
        r.iterations = t;
        Vector w;
        if (!contains(P, e.center, 0.0)) {
            w = separating_hyperplane(P, e.center);
        } else {
            Vector x = f.respond(e.center);
            const double dist = (target - x).norm();
            r.trace.push_back({t, e.center, x, dist, since(t0)});
            if (dist < r.best_distance) {
                r.best_distance = dist;
                r.best_action = e.center;
                r.induced = x;
            }
            if (dist <= epsilon) break;
            w = s * (target - x);
        }
        e = ellipsoid_step(e, w);
        if (d > 1) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(e.shape, Eigen::EigenvaluesOnly);
            const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
            if (!(lo > 0) || hi / lo > max_condition)
                throw NumericalError("ellipsoid: shape matrix condition number exceeded " +
                                     std::to_string(max_condition));
        }
    }
    if (r.trace.empty()) throw NumericalError("ellipsoid: no feasible center was ever queried");
    r.leader_action = r.best_action;
    r.distance = r.best_distance;
    r.converged = r.distance <= epsilon;
    r.queries = f.queries() - q0;
    return r;
}

}  // namespace

InduceResult learn_price_ellipsoid(Responder& follower, const Vector& target, const EllipsoidConfig& cfg) {
    if (!(cfg.epsilon > 0)) throw ConfigError("epsilon must be positive");
    if (target.size() != follower.response_dim()) throw UsageError("ellipsoid: target dimension mismatch");
    const int d = follower.action_dim();
    const auto sch = learn_price_schedule(d, cfg.lambda_F, cfg.holder_beta, cfg.gamma, cfg.epsilon, cfg.sigma);
    const double T = cfg.override_T ? double(*cfg.override_T)
                                    : ellipsoid_price_iterations(d, cfg.lambda_F, cfg.gamma, cfg.epsilon, cfg.sigma);
    return ellipsoid_loop(follower, target, sch.price_radius, T, cfg.epsilon, cfg.max_condition);
}

InduceResult learn_toll_ellipsoid(Responder& follower, const Vector& target, const EllipsoidConfig& cfg) {
    if (!(cfg.epsilon > 0)) throw ConfigError("epsilon must be positive");
    if (target.size() != follower.response_dim()) throw UsageError("ellipsoid: target dimension mismatch");
    const int m = follower.action_dim();
    const double T = cfg.override_T ? double(*cfg.override_T) : ellipsoid_toll_iterations(m, cfg.epsilon, cfg.sigma);
    return ellipsoid_loop(follower, target, double(m), T, cfg.epsilon, cfg.max_condition);
}

}  // namespace stackel
