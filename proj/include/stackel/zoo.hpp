#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "stackel/geometry.hpp"

namespace stackel {

// Convex body in normalized coordinates u together with the affine map x = A u + b back to the
// caller's coordinates. Bodies are the unit cube, the unit ball, or a product of regular simplices
// (path-flow polytopes).
class RoundedSet {
public:
    enum class Kind { Cube, Ball, Simplices };

    static RoundedSet cube(const Vector& lo, const Vector& hi);
    static RoundedSet ball(const Vector& center, double radius);
    // One block per commodity: (number of paths, demand). Coordinates of the original space are path
    // flows, concatenated block by block.
    static RoundedSet simplices(const std::vector<std::pair<int, double>>& blocks);

    Kind kind() const { return kind_; }
    int dim() const { return int(A_.cols()); }
    int original_dim() const { return int(A_.rows()); }
    const Matrix& A() const { return A_; }
    const Vector& b() const { return b_; }

    Vector to_original(const Vector& u) const { return A_ * u + b_; }
    Vector from_original(const Vector& x) const;

    bool contains(const Vector& u, double tol = 1e-12) const;
    Vector project(const Vector& u) const;
    Vector center() const;
    Vector bbox_lo() const;
    Vector bbox_hi() const;
    double inradius() const;
    double circumradius() const;

private:
    Kind kind_ = Kind::Cube;
    Matrix A_;
    Vector b_;
    std::vector<int> paths_;   // simplices only
};

// Box -> unit cube, Shrunk(box) -> unit cube through the composed map, Ball -> unit ball.
// Anything else is unsupported.
RoundedSet round_set(const FeasibleSet& set);

// Euclidean projection onto {z >= 0, sum z = 1}.
Vector project_to_simplex(const Vector& z);

class ApproxEvaluator {
public:
    explicit ApproxEvaluator(std::function<double(const Vector&)> f) : f_(std::move(f)) {}
    double operator()(const Vector& x) {
        ++calls_;
        return f_(x);
    }
    long calls() const { return calls_; }

private:
    std::function<double(const Vector&)> f_;
    long calls_ = 0;
};

enum class ZooMethod { GridRefine, SmoothedGradient };

struct ZooConfig {
    double epsilon = 1e-2;
    ZooMethod method = ZooMethod::GridRefine;
    std::optional<long> budget;   // default 10 d / eps^2, capped at 1e6
    std::uint64_t seed = 0;
    int grid_points = 5;          // per dimension and level
    double resolution = 1e-3;     // final grid spacing relative to the body's width
};

struct ZooResult {
    Vector x;            // caller's coordinates
    Vector u;            // normalized coordinates
    long evaluations = 0;
    bool certified = true;
};

long default_zoo_budget(int d, double epsilon);

// Approximately minimize a convex function over the body from evaluations with error about eps/d.
ZooResult minimize(ApproxEvaluator& f, const RoundedSet& body, const ZooConfig& cfg);

}  // namespace stackel
