#include "stackel/geometry.hpp"

#include <cmath>
#include <string>

#include "stackel/errors.hpp"

namespace stackel {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_dim(const FeasibleSet& set, const Vector& x) {
    if (x.size() != set.dim())
        throw UsageError("dimension mismatch: set has dim " + std::to_string(set.dim()) +
                         ", point has dim " + std::to_string(x.size()));
}

}  // namespace

FeasibleSet::FeasibleSet(Box b) : v_(std::move(b)) {
    const auto& bx = std::get<Box>(v_);
    if (bx.lo.size() != bx.hi.size() || bx.lo.size() == 0)
        throw UsageError("box bounds must be nonempty and of equal dimension");
    if ((bx.lo.array() > bx.hi.array()).any()) throw UsageError("box lower bound exceeds upper bound");
}

FeasibleSet::FeasibleSet(Ball b) : v_(std::move(b)) {
    const auto& bl = std::get<Ball>(v_);
    if (bl.center.size() == 0 || !(bl.radius > 0)) throw UsageError("ball needs a center and positive radius");
}

FeasibleSet::FeasibleSet(NonnegBall b) : v_(b) {
    if (b.dim <= 0 || !(b.radius > 0)) throw UsageError("nonneg ball needs dim >= 1 and positive radius");
}

FeasibleSet::FeasibleSet(Shrunk s) : v_(std::move(s)) {
    const auto& sh = std::get<Shrunk>(v_);
    if (!sh.base) throw UsageError("shrunk set without a base");
    if (!(sh.delta > 0 && sh.delta < 0.5)) throw UsageError("shrink delta must lie in (0, 1/2)");
}

FeasibleSet FeasibleSet::cube(int dim, double lo, double hi) {
    return Box{Vector::Constant(dim, lo), Vector::Constant(dim, hi)};
}

int FeasibleSet::dim() const {
    return std::visit(overloaded{
                          [](const Box& b) { return int(b.lo.size()); },
                          [](const Ball& b) { return int(b.center.size()); },
                          [](const NonnegBall& b) { return b.dim; },
                          [](const Shrunk& s) { return s.base->dim(); },
                      },
                      v_);
}

double FeasibleSet::diameter() const {
    return std::visit(overloaded{
                          [](const Box& b) { return (b.hi - b.lo).norm(); },
                          [](const Ball& b) { return 2.0 * b.radius; },
                          // the widest pair is two boundary points of the positive orthant part;
                          // for d = 1 it is the segment [0, r]
                          [](const NonnegBall& b) { return b.dim == 1 ? b.radius : std::sqrt(2.0) * b.radius; },
                          [](const Shrunk& s) { return (1.0 - 2.0 * s.delta) * s.base->diameter(); },
                      },
                      v_);
}

Vector FeasibleSet::interior_point() const {
    return std::visit(overloaded{
                          [](const Box& b) -> Vector { return 0.5 * (b.lo + b.hi); },
                          [](const Ball& b) -> Vector { return b.center; },
                          [](const NonnegBall& b) -> Vector {
                              return Vector::Constant(b.dim, 0.5 * b.radius / std::sqrt(double(b.dim)));
                          },
                          [](const Shrunk& s) -> Vector {
                              Vector y = s.base->interior_point();
                              return ((1.0 - 2.0 * s.delta) * y.array() + s.delta).matrix();
                          },
                      },
                      v_);
}

Vector project(const FeasibleSet& set, const Vector& x) {
    check_dim(set, x);
    return std::visit(overloaded{
                          [&](const Box& b) -> Vector { return x.cwiseMax(b.lo).cwiseMin(b.hi); },
                          [&](const Ball& b) -> Vector {
                              Vector r = x - b.center;
                              double n = r.norm();
                              if (n <= b.radius) return x;
                              return b.center + (b.radius / n) * r;
                          },
                          [&](const NonnegBall& b) -> Vector {
                              Vector y = x.cwiseMax(0.0);
                              double n = y.norm();
                              if (n > b.radius) y *= b.radius / n;
                              return y;
                          },
                          [&](const Shrunk& s) -> Vector {
                              const double scale = 1.0 - 2.0 * s.delta;
                              Vector y = ((x.array() - s.delta) / scale).matrix();
                              Vector py = project(*s.base, y);
                              return (scale * py.array() + s.delta).matrix();
                          },
                      },
                      set.variant());
}

bool contains(const FeasibleSet& set, const Vector& x, double tol) {
    check_dim(set, x);
    return (x - project(set, x)).norm() <= tol;
}

FeasibleSet shrink(const FeasibleSet& set, double delta) {
    if (!(delta > 0 && delta < 0.5)) throw UsageError("shrink delta must lie in (0, 1/2)");
    return Shrunk{std::make_shared<const FeasibleSet>(set), delta};
}

Vector separating_hyperplane(const FeasibleSet& set, const Vector& x) {
    check_dim(set, x);
    if (contains(set, x, 0.0)) throw UsageError("separating_hyperplane: point lies inside the set");
    return std::visit(
        overloaded{
            [&](const Box& b) -> Vector {
                // most violated face
                Eigen::Index best = 0;
                double viol = -1.0, sign = 1.0;
                for (Eigen::Index i = 0; i < x.size(); ++i) {
                    if (x[i] - b.hi[i] > viol) { viol = x[i] - b.hi[i]; best = i; sign = 1.0; }
                    if (b.lo[i] - x[i] > viol) { viol = b.lo[i] - x[i]; best = i; sign = -1.0; }
                }
                Vector w = Vector::Zero(x.size());
                w[best] = sign;
                return w;
            },
            [&](const Ball& b) -> Vector { return (x - b.center).normalized(); },
            [&](const NonnegBall&) -> Vector {
                Eigen::Index i;
                double m = x.minCoeff(&i);
                if (m < 0) {
                    Vector w = Vector::Zero(x.size());
                    w[i] = -1.0;
                    return w;
                }
                return x.normalized();
            },
            [&](const Shrunk& s) -> Vector {
                // positive scaling plus translation keeps normals unchanged
                Vector y = ((x.array() - s.delta) / (1.0 - 2.0 * s.delta)).matrix();
                return separating_hyperplane(*s.base, y);
            },
        },
        set.variant());
}

}  // namespace stackel
