#pragma once

#include <variant>

#include "stackel/vector.hpp"

namespace stackel {

// v(x) = (sum alpha_i x_i^rho)^beta
struct CES {
    Vector alpha;
    double rho;
    double beta;
};

// v(x) = prod x_i^alpha_i
struct CobbDouglas {
    Vector alpha;
};

// v(x) = <a, x> - (q/2) ||x||^2
struct QuadraticValuation {
    Vector a;
    double q;
};

// The valuation together with the box (floor, bound]^d it is evaluated on.
class Valuation {
public:
    using Variant = std::variant<CES, CobbDouglas, QuadraticValuation>;

    // floor < 0 selects the default 1e-4 * bound
    Valuation(Variant v, double bound = 1.0, double floor = -1.0);

    const Variant& variant() const { return v_; }
    int dim() const;
    double bound() const { return bound_; }
    double floor() const { return floor_; }
    bool homogeneous() const;

    double value(const Vector& x) const;
    Vector gradient(const Vector& x) const;

    double degree() const;                       // k with v(tx) = t^k v(x)
    double strong_concavity() const;             // R on (0, bound]^d
    double holder_constant() const;              // lambda with |v(x)-v(y)| <= lambda ||x-y||^exponent
    double holder_exponent() const;

    // Region the follower chooses from: [floor, bound]^d.
    Vector region_lo() const { return Vector::Constant(dim(), floor_); }
    Vector region_hi() const { return Vector::Constant(dim(), bound_); }

private:
    void check_point(const Vector& x) const;

    Variant v_;
    double bound_;
    double floor_;
};

struct LinearCost {
    Vector c;
};

// c(x) = <c, x> + (q/2) ||x||^2
struct QuadraticCost {
    Vector c;
    double q;
};

class CostFunction {
public:
    using Variant = std::variant<LinearCost, QuadraticCost>;

    CostFunction(Variant v);
    const Variant& variant() const { return v_; }
    int dim() const;
    double value(const Vector& x) const;
    Vector gradient(const Vector& x) const;
    double lipschitz(double bound) const;   // on [0, bound]^d

private:
    Variant v_;
};

// Seller's profit when the buyer is at a bundle induced by the marginal price.
double profit_of_bundle(const Valuation& v, const CostFunction& c, const Vector& x);

}  // namespace stackel
