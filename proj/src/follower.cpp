#include "stackel/follower.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stackel/errors.hpp"

namespace stackel {

double follower_utility(const Valuation& v, const Vector& price, Incentive inc, const Vector& x) {
    return v.value(x) - incentive_sign(inc) * price.dot(x);
}

Vector best_response_exact(const Valuation& v, const FeasibleSet& set, const Vector& price, Incentive inc,
                           const BestResponseOptions& opts, const Vector* warm_start) {
    if (price.size() != v.dim() || set.dim() != v.dim()) throw UsageError("best response: dimension mismatch");
    const double s = incentive_sign(inc);

    if (const auto* q = std::get_if<QuadraticValuation>(&v.variant())) {
        // argmax <a - s p, x> - q/2 |x|^2 is the projection of (a - s p)/q
        return project(set, (q->a - s * price) / q->q);
    }

    const double sigma = v.strong_concavity();
    // |x - x*| <= 2 |G| / sigma, and gap <= 2 |G|^2 / sigma, for the gradient mapping G
    double g_target = 0.5 * sigma * opts.tol;
    if (opts.utility_gap) g_target = std::min(g_target, std::sqrt(0.5 * sigma * *opts.utility_gap));

    Vector x = project(set, warm_start ? *warm_start : set.interior_point());
    auto grad = [&](const Vector& y) -> Vector { return v.gradient(y) - s * price; };
    Vector g = grad(x);
    double t = 1.0;
    double residual = INFINITY;
    for (long k = 0; k < opts.max_iter; ++k) {
        Vector xn, gn;
        for (int bt = 0;; ++bt) {
            xn = project(set, x + t * g);
            gn = grad(xn);
            const double step = (xn - x).norm();
            if (step == 0.0 || (gn - g).norm() <= step / t) break;
            t *= 0.5;
            if (bt > 200) throw NumericalError("best response: step size underflow");
        }
        residual = (xn - x).norm() / t;
        if (residual <= g_target) return x;
        x = std::move(xn);
        g = std::move(gn);
        t = std::min(2.0 * t, 1e8);
    }
    throw SolverError("best response did not converge within " + std::to_string(opts.max_iter) +
                          " iterations (gradient-mapping norm " + std::to_string(residual) + ")",
                      residual);
}

FollowerOracle::FollowerOracle(Valuation v, FeasibleSet set, FollowerMode mode, Incentive inc)
    : v_(std::move(v)), set_(std::move(set)), mode_(std::move(mode)), inc_(inc) {
    if (set_.dim() != v_.dim()) throw UsageError("follower: set and valuation dimensions differ");
    std::uint64_t seed = 0;
    if (auto* a = std::get_if<ApproximateMode>(&mode_)) {
        if (!(a->zeta > 0)) throw UsageError("approximate follower needs zeta > 0");
        seed = a->seed;
    }
    if (auto* n = std::get_if<NoisyMode>(&mode_)) {
        if (!(n->nu >= 0)) throw UsageError("noisy follower needs nu >= 0");
        seed = n->seed;
    }
    rng_.seed(seed);
}

double FollowerOracle::tol() const {
    return std::visit([](const auto& m) { return m.tol; }, mode_);
}

Vector FollowerOracle::exact_response(const Vector& price) const {
    BestResponseOptions o;
    o.tol = tol();
    return best_response_exact(v_, set_, price, inc_, o, warm_ ? &*warm_ : nullptr);
}

Vector FollowerOracle::respond(const Vector& price) {
    if (price.size() != action_dim()) throw UsageError("follower: price dimension mismatch");
    ++queries_;
    BestResponseOptions o;
    o.tol = tol();
    if (const auto* a = std::get_if<ApproximateMode>(&mode_)) o.utility_gap = 0.5 * a->zeta;
    Vector x = best_response_exact(v_, set_, price, inc_, o, warm_ ? &*warm_ : nullptr);
    warm_ = x;

    if (const auto* n = std::get_if<NoisyMode>(&mode_)) {
        std::normal_distribution<double> nd(0.0, 1.0);
        Vector noise(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) noise[i] = nd(rng_);
        return x + n->nu * noise;
    }
    if (const auto* a = std::get_if<ApproximateMode>(&mode_)) {
        // Walk along a random direction as far as the utility loss allows.
        std::normal_distribution<double> nd(0.0, 1.0);
        Vector u(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) u[i] = nd(rng_);
        u.normalize();
        const double base = follower_utility(v_, price, inc_, x);
        auto loss = [&](double t) { return base - follower_utility(v_, price, inc_, project(set_, x + t * u)); };
        double lo = 0.0, hi = set_.diameter();
        if (loss(hi) <= 0.5 * a->zeta) return project(set_, x + hi * u);
        for (int i = 0; i < 60; ++i) {
            double mid = 0.5 * (lo + hi);
            (loss(mid) <= 0.5 * a->zeta ? lo : hi) = mid;
        }
        return project(set_, x + lo * u);
    }
    return x;
}

}  // namespace stackel
