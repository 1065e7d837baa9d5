#include "stackel/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "stackel/errors.hpp"

namespace stackel {

namespace {

// Orthonormal basis of {z in R^P : sum z = 0}, one column per direction.
Matrix helmert(int P) {
    Matrix B = Matrix::Zero(P, P - 1);
    for (int j = 1; j < P; ++j) {
        const double s = 1.0 / std::sqrt(double(j) * (j + 1));
        for (int i = 0; i < j; ++i) B(i, j - 1) = s;
        B(j, j - 1) = -j * s;
    }
    return B;
}

void check_rounding(const RoundedSet& r) {
    const double ratio = r.circumradius() / r.inradius();
    if (ratio > 2.0 * std::sqrt(double(r.dim())) + 1e-12)
        throw UnsupportedError("body is not well rounded: R/r = " + std::to_string(ratio));
}

}  // namespace

Vector project_to_simplex(const Vector& z) {
    const long n = z.size();
    std::vector<double> s(z.data(), z.data() + n);
    std::sort(s.begin(), s.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (long k = 0; k < n; ++k) {
        cum += s[k];
        const double t = (cum - 1.0) / double(k + 1);
        if (s[k] - t > 0) theta = t;
    }
    return (z.array() - theta).cwiseMax(0.0).matrix();
}

RoundedSet RoundedSet::cube(const Vector& lo, const Vector& hi) {
    if (lo.size() != hi.size() || lo.size() == 0) throw UsageError("cube: bad bounds");
    if ((hi.array() <= lo.array()).any()) throw UnsupportedError("cube: degenerate box has no interior");
    RoundedSet r;
    r.kind_ = Kind::Cube;
    r.A_ = (hi - lo).asDiagonal();
    r.b_ = lo;
    return r;
}

RoundedSet RoundedSet::ball(const Vector& center, double radius) {
    if (!(radius > 0)) throw UsageError("ball: radius must be positive");
    RoundedSet r;
    r.kind_ = Kind::Ball;
    r.A_ = radius * Matrix::Identity(center.size(), center.size());
    r.b_ = center;
    return r;
}

RoundedSet RoundedSet::simplices(const std::vector<std::pair<int, double>>& blocks) {
    int rows = 0, cols = 0;
    for (auto [P, k] : blocks) {
        if (P < 1 || !(k > 0)) throw UsageError("simplices: each block needs >= 1 path and positive demand");
        rows += P;
        cols += P - 1;
    }
    if (cols == 0) throw UsageError("simplices: no free coordinates");
    RoundedSet r;
    r.kind_ = Kind::Simplices;
    r.A_ = Matrix::Zero(rows, cols);
    r.b_ = Vector::Zero(rows);
    int ro = 0, co = 0;
    for (auto [P, k] : blocks) {
        if (P > 1) r.A_.block(ro, co, P, P - 1) = k * helmert(P);
        r.b_.segment(ro, P).setConstant(k / P);
        r.paths_.push_back(P);
        ro += P;
        co += P - 1;
    }
    check_rounding(r);
    return r;
}

Vector RoundedSet::from_original(const Vector& x) const {
    if (x.size() != original_dim()) throw UsageError("rounded set: dimension mismatch");
    return A_.colPivHouseholderQr().solve(x - b_);
}

bool RoundedSet::contains(const Vector& u, double tol) const {
    return (u - project(u)).norm() <= tol;
}

Vector RoundedSet::project(const Vector& u) const {
    if (u.size() != dim()) throw UsageError("rounded set: dimension mismatch");
    switch (kind_) {
        case Kind::Cube:
            return u.cwiseMax(0.0).cwiseMin(1.0);
        case Kind::Ball: {
            const double n = u.norm();
            return n <= 1.0 ? u : Vector(u / n);
        }
        case Kind::Simplices: {
            Vector out(u.size());
            int co = 0;
            for (int P : paths_) {
                if (P == 1) continue;
                const Matrix B = helmert(P);
                Vector z = B * u.segment(co, P - 1);
                z.array() += 1.0 / P;
                out.segment(co, P - 1) = B.transpose() * project_to_simplex(z);
                co += P - 1;
            }
            return out;
        }
    }
    return u;
}

Vector RoundedSet::center() const {
    return kind_ == Kind::Cube ? Vector::Constant(dim(), 0.5) : Vector::Zero(dim());
}

Vector RoundedSet::bbox_lo() const {
    switch (kind_) {
        case Kind::Cube: return Vector::Zero(dim());
        case Kind::Ball: return Vector::Constant(dim(), -1.0);
        case Kind::Simplices: {
            Vector lo(dim());
            int co = 0;
            for (int P : paths_) {
                if (P == 1) continue;
                lo.segment(co, P - 1) = helmert(P).colwise().minCoeff().transpose();
                co += P - 1;
            }
            return lo;
        }
    }
    return {};
}

Vector RoundedSet::bbox_hi() const {
    switch (kind_) {
        case Kind::Cube: return Vector::Ones(dim());
        case Kind::Ball: return Vector::Ones(dim());
        case Kind::Simplices: {
            Vector hi(dim());
            int co = 0;
            for (int P : paths_) {
                if (P == 1) continue;
                hi.segment(co, P - 1) = helmert(P).colwise().maxCoeff().transpose();
                co += P - 1;
            }
            return hi;
        }
    }
    return {};
}

double RoundedSet::inradius() const {
    switch (kind_) {
        case Kind::Cube: return 0.5;
        case Kind::Ball: return 1.0;
        case Kind::Simplices: {
            double r = std::numeric_limits<double>::infinity();
            for (int P : paths_)
                if (P > 1) r = std::min(r, 1.0 / std::sqrt(double(P) * (P - 1)));
            return r;
        }
    }
    return 0;
}

double RoundedSet::circumradius() const {
    switch (kind_) {
        case Kind::Cube: return 0.5 * std::sqrt(double(dim()));
        case Kind::Ball: return 1.0;
        case Kind::Simplices: {
            double s = 0;
            for (int P : paths_) s += double(P - 1) / P;
            return std::sqrt(s);
        }
    }
    return 0;
}

RoundedSet round_set(const FeasibleSet& set) {
    // Collapse nested shrinks into one affine image of the innermost set.
    double scale = 1.0;
    Vector shift = Vector::Zero(set.dim());
    const FeasibleSet* cur = &set;
    while (const auto* s = std::get_if<Shrunk>(&cur->variant())) {
        // x = scale * y + shift, y = (1 - 2 delta) z + delta
        shift = (shift.array() + scale * s->delta).matrix();
        scale *= 1.0 - 2.0 * s->delta;
        cur = s->base.get();
    }
    if (const auto* b = std::get_if<Box>(&cur->variant())) {
        RoundedSet r = RoundedSet::cube(scale * b->lo + shift, scale * b->hi + shift);
        check_rounding(r);
        return r;
    }
    if (const auto* b = std::get_if<Ball>(&cur->variant()))
        return RoundedSet::ball(scale * b->center + shift, scale * b->radius);
    throw UnsupportedError("round_set: only boxes, balls and their shrinks have a known rounding");
}

long default_zoo_budget(int d, double epsilon) {
    const double b = 10.0 * d / (epsilon * epsilon);
    return static_cast<long>(std::min(b, 1e6));
}

namespace {

struct VecLess {
    bool operator()(const Vector& a, const Vector& b) const {
        return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
    }
};

// Least-squares quadratic model around c; returns its minimizer if the fitted Hessian is positive definite.
std::optional<Vector> quadratic_fit_minimizer(const std::vector<std::pair<Vector, double>>& pts, const Vector& c) {
    const int d = int(c.size());
    const int m = 1 + d + d * (d + 1) / 2;
    if (int(pts.size()) < m + 2) return std::nullopt;
    Matrix X(pts.size(), m);
    Vector y(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
        const Vector z = pts[i].first - c;
        int col = 0;
        X(i, col++) = 1.0;
        for (int j = 0; j < d; ++j) X(i, col++) = z[j];
        for (int j = 0; j < d; ++j)
            for (int k = j; k < d; ++k) X(i, col++) = (j == k ? 0.5 : 1.0) * z[j] * z[k];
        y[i] = pts[i].second;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    if (qr.rank() < m) return std::nullopt;
    const Vector coef = qr.solve(y);
    Vector g(d);
    Matrix H(d, d);
    int col = 1;
    for (int j = 0; j < d; ++j) g[j] = coef[col++];
    for (int j = 0; j < d; ++j)
        for (int k = j; k < d; ++k) {
            H(j, k) = coef[col];
            H(k, j) = coef[col];
            ++col;
        }
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) return std::nullopt;
    return Vector(c - llt.solve(g));
}

ZooResult grid_refine(ApproxEvaluator& f, const RoundedSet& body, const ZooConfig& cfg, long budget) {
    const int d = body.dim();
    if (d > 3) throw UnsupportedError("grid refinement is limited to d <= 3");
    const int n = std::max(cfg.grid_points, 3);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> jitter(-0.25, 0.25);

    const Vector blo = body.bbox_lo(), bhi = body.bbox_hi();
    const Vector width = bhi - blo;
    const double h_min = cfg.resolution * width.maxCoeff();

    std::map<Vector, double, VecLess> seen;
    long used = 0;
    bool exhausted = false;
    auto eval = [&](const Vector& u) -> double {
        auto it = seen.find(u);
        if (it != seen.end()) return it->second;
        if (used >= budget) {
            exhausted = true;
            return std::numeric_limits<double>::infinity();
        }
        ++used;
        const double v = f(body.to_original(u));
        seen.emplace(u, v);
        return v;
    };

    Vector h = width / double(n - 1);
    Vector lo = blo;
    for (int j = 0; j < d; ++j) lo[j] += jitter(rng) * h[j];
    Vector best;
    double best_v = std::numeric_limits<double>::infinity();
    std::vector<Vector> level_points;
    while (true) {
        level_points.clear();
        long total = 1;
        for (int j = 0; j < d; ++j) total *= n;
        for (long idx = 0; idx < total && !exhausted; ++idx) {
            long r = idx;
            Vector g(d);
            for (int j = 0; j < d; ++j) {
                g[j] = lo[j] + double(r % n) * h[j];
                r /= n;
            }
            Vector u = body.project(g);
            const double v = eval(u);
            level_points.push_back(u);
            if (v < best_v) {
                best_v = v;
                best = u;
            }
        }
        if (exhausted || h.maxCoeff() <= h_min) break;
        lo = best - h;
        h *= 2.0 / double(n - 1);
    }

    ZooResult res;
    res.u = best;
    res.certified = !exhausted;
    if (!exhausted) {
        // Fit a quadratic to what was seen near the incumbent; averages out evaluation error.
        const double reach = double(n - 1) * h.maxCoeff();
        std::vector<std::pair<Vector, double>> near;
        for (const auto& [u, v] : seen)
            if ((u - best).lpNorm<Eigen::Infinity>() <= reach) near.emplace_back(u, v);
        if (auto m = quadratic_fit_minimizer(near, best)) {
            Vector clipped = m->cwiseMax((best.array() - reach).matrix()).cwiseMin((best.array() + reach).matrix());
            res.u = body.project(clipped);
        }
    }
    res.x = body.to_original(res.u);
    res.evaluations = used;
    return res;
}

ZooResult smoothed_gradient(ApproxEvaluator& f, const RoundedSet& body, const ZooConfig& cfg, long budget) {
    const int d = body.dim();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const Vector c = body.center();
    const double r = body.inradius();
    const double D = 2.0 * body.circumradius();
    const double mu = std::min(0.5 * r, std::sqrt(cfg.epsilon));
    const double kappa = 1.0 - mu / r;
    // iterates stay in c + kappa (K - c) so that x +- mu u is always feasible
    auto proj_inner = [&](const Vector& y) -> Vector {
        return c + kappa * (body.project(c + (y - c) / kappa) - c);
    };

    const long iters = std::max<long>(1, (budget - 1) / 2);
    Vector x = c;
    Vector avg = Vector::Zero(d);
    long n_avg = 0;
    double g2 = 0.0;
    for (long t = 0; t < iters; ++t) {
        Vector u(d);
        for (int j = 0; j < d; ++j) u[j] = nd(rng);
        u.normalize();
        const double fp = f(body.to_original(x + mu * u));
        const double fm = f(body.to_original(x - mu * u));
        const Vector g = (d / (2.0 * mu)) * (fp - fm) * u;
        g2 += g.squaredNorm();
        if (g2 > 0) x = proj_inner(x - (D / std::sqrt(g2)) * g);
        if (t >= iters / 2) {
            avg += x;
            ++n_avg;
        }
    }
    ZooResult res;
    res.u = body.project(avg / double(n_avg));
    res.x = body.to_original(res.u);
    res.evaluations = 2 * iters;
    res.certified = budget >= default_zoo_budget(d, cfg.epsilon);
    return res;
}

}  // namespace

ZooResult minimize(ApproxEvaluator& f, const RoundedSet& body, const ZooConfig& cfg) {
    if (!(cfg.epsilon > 0)) throw ConfigError("zoo: epsilon must be positive");
    const long budget = cfg.budget ? *cfg.budget : default_zoo_budget(body.dim(), cfg.epsilon);
    if (budget < 1) throw ConfigError("zoo: budget must be positive");
    return cfg.method == ZooMethod::GridRefine ? grid_refine(f, body, cfg, budget)
                                               : smoothed_gradient(f, body, cfg, budget);
}

}  // namespace stackel
