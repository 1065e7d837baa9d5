#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <variant>

#include "stackel/geometry.hpp"
#include "stackel/preferences.hpp"

namespace stackel {

// How the leader's action enters the follower's utility:
// Charge: u(x) = v(x) - <p, x>   (prices, tolls)
// Reward: u(x) = v(x) + <p, x>   (contract payments)
enum class Incentive { Charge, Reward };

inline double incentive_sign(Incentive i) { return i == Incentive::Charge ? 1.0 : -1.0; }

// Anything that reacts to a leader action with an observed follower action.
class Responder {
public:
    virtual ~Responder() = default;
    virtual Vector respond(const Vector& action) = 0;
    virtual long queries() const = 0;
    virtual int action_dim() const = 0;
    virtual int response_dim() const = 0;
    virtual Incentive incentive() const = 0;
};

struct ExactMode {
    double tol = 1e-8;
};

// Returns any x' with u(x') >= max u - zeta.
struct ApproximateMode {
    double zeta;
    std::uint64_t seed = 0;
    double tol = 1e-8;
};

// Returns x*(p) + N(0, nu^2 I).
struct NoisyMode {
    double nu;
    std::uint64_t seed = 0;
    double tol = 1e-8;
};

using FollowerMode = std::variant<ExactMode, ApproximateMode, NoisyMode>;

struct BestResponseOptions {
    double tol = 1e-8;
    long max_iter = 1'000'000;
    // Stop once the utility gap is provably below this (when set); otherwise the distance rule.
    std::optional<double> utility_gap;
};

// Exact maximizer of v(x) - s <p, x> over the set, to within opts.tol in distance.
Vector best_response_exact(const Valuation& v, const FeasibleSet& set, const Vector& price, Incentive inc,
                           const BestResponseOptions& opts = {}, const Vector* warm_start = nullptr);

double follower_utility(const Valuation& v, const Vector& price, Incentive inc, const Vector& x);

class FollowerOracle : public Responder {
public:
    FollowerOracle(Valuation v, FeasibleSet set, FollowerMode mode = ExactMode{},
                   Incentive inc = Incentive::Charge);

    Vector respond(const Vector& price) override;
    long queries() const override { return queries_; }
    int action_dim() const override { return v_.dim(); }
    int response_dim() const override { return v_.dim(); }
    Incentive incentive() const override { return inc_; }

    // Noise-free best response; does not count as a query.
    Vector exact_response(const Vector& price) const;

    const Valuation& valuation() const { return v_; }
    const FeasibleSet& set() const { return set_; }
    const FollowerMode& mode() const { return mode_; }
    double tol() const;

private:
    Valuation v_;
    FeasibleSet set_;
    FollowerMode mode_;
    Incentive inc_;
    long queries_ = 0;
    std::mt19937_64 rng_;
    std::optional<Vector> warm_;
};

}  // namespace stackel
