#pragma once

#include <memory>
#include <variant>

#include "stackel/vector.hpp"

namespace stackel {

class FeasibleSet;

struct Box {
    Vector lo;
    Vector hi;
};

struct Ball {
    Vector center;
    double radius;
};

// {x >= 0, ||x|| <= radius}
struct NonnegBall {
    int dim;
    double radius;
};

// (1 - 2 delta) * base + delta * 1
struct Shrunk {
    std::shared_ptr<const FeasibleSet> base;
    double delta;
};

class FeasibleSet {
public:
    using Variant = std::variant<Box, Ball, NonnegBall, Shrunk>;

    FeasibleSet(Box b);
    FeasibleSet(Ball b);
    FeasibleSet(NonnegBall b);
    FeasibleSet(Shrunk s);

    static FeasibleSet box(const Vector& lo, const Vector& hi) { return Box{lo, hi}; }
    static FeasibleSet cube(int dim, double lo, double hi);
    static FeasibleSet ball(const Vector& c, double r) { return Ball{c, r}; }
    static FeasibleSet nonneg_ball(int dim, double r) { return NonnegBall{dim, r}; }

    const Variant& variant() const { return v_; }
    int dim() const;
    double diameter() const;

    // Any point of the set; used to seed iterative solvers.
    Vector interior_point() const;

private:
    Variant v_;
};

Vector project(const FeasibleSet& set, const Vector& x);
bool contains(const FeasibleSet& set, const Vector& x, double tol = 1e-12);
FeasibleSet shrink(const FeasibleSet& set, double delta);

// Unit w with <p - x, w> <= 0 for every p in the set. Throws UsageError if x is inside.
Vector separating_hyperplane(const FeasibleSet& set, const Vector& x);

}  // namespace stackel
