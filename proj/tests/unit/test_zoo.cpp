#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "stackel/errors.hpp"
#include "stackel/zoo.hpp"
#include "test_util.hpp"

using namespace stackel;
using testutil::vec;

namespace {

struct Quadratic {
    Matrix H;
    Vector c;
    double operator()(const Vector& x) const { return 0.5 * (x - c).dot(H * (x - c)); }
};

Quadratic random_quadratic(std::mt19937_64& rng, int d) {
    Matrix M(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) M(i, j) = std::normal_distribution<double>(0, 1)(rng);
    return {M * M.transpose() / d + 0.2 * Matrix::Identity(d, d), testutil::uniform(rng, d, -0.2, 1.2)};
}

// Minimum over the unit cube by long projected gradient descent.
double cube_minimum(const Quadratic& q) {
    const int d = int(q.c.size());
    const double L = Eigen::SelfAdjointEigenSolver<Matrix>(q.H).eigenvalues().maxCoeff();
    Vector x = Vector::Constant(d, 0.5);
    for (int k = 0; k < 20000; ++k) x = (x - q.H * (x - q.c) / L).cwiseMax(0.0).cwiseMin(1.0);
    return q(x);
}

}  // namespace

TEST_CASE("one-dimensional quadratic") {
    ApproxEvaluator f([](const Vector& x) { return (x[0] - 0.3) * (x[0] - 0.3); });
    ZooConfig cfg;
    cfg.epsilon = 1e-3;
    auto r = minimize(f, round_set(FeasibleSet::cube(1, 0, 1)), cfg);
    CHECK(std::abs(r.x[0] - 0.3) <= 0.032);
    CHECK((r.x[0] - 0.3) * (r.x[0] - 0.3) <= 1e-3);
    CHECK(r.certified);
    CHECK(r.evaluations == f.calls());
}

TEST_CASE("negated square-root profit under bounded noise") {
    const double eps = 5e-3;
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> U(-1, 1);
    ApproxEvaluator f([&](const Vector& x) { return -(0.5 * std::sqrt(x[0]) - x[0]) + eps * U(rng); });
    ZooConfig cfg;
    cfg.epsilon = eps;
    auto r = minimize(f, round_set(FeasibleSet::box(vec({1e-4}), vec({1.0}))), cfg);
    CHECK(0.5 * std::sqrt(r.x[0]) - r.x[0] >= 1.0 / 16 - eps);
}

TEST_CASE("rounding maps") {
    auto r = round_set(FeasibleSet::box(vec({0, 0}), vec({1, 2})));
    CHECK(r.circumradius() / r.inradius() == doctest::Approx(std::sqrt(2.0)));
    Vector x = r.to_original(vec({1, 1}));
    CHECK(x[1] == doctest::Approx(2.0));

    auto s = round_set(shrink(FeasibleSet::box(vec({0, 0}), vec({1, 2})), 0.1));
    Vector lo = s.to_original(vec({0, 0})), hi = s.to_original(vec({1, 1}));
    CHECK(lo[0] == doctest::Approx(0.1));
    CHECK(hi[1] == doctest::Approx(0.8 * 2 + 0.1));

    auto simplex = RoundedSet::simplices({{4, 1.0}});
    CHECK(simplex.dim() == 3);
    CHECK(simplex.circumradius() / simplex.inradius() <= 2 * std::sqrt(3.0));
    // vertices of the body map to single-path flows
    Vector z = simplex.to_original(simplex.project(vec({10, 10, 10})));
    CHECK(z.sum() == doctest::Approx(1.0));
    CHECK(z.minCoeff() >= -1e-12);

    CHECK_THROWS_AS(round_set(FeasibleSet::nonneg_ball(2, 1)), UnsupportedError);
    CHECK_THROWS_AS(RoundedSet::simplices({{7, 1.0}}), UnsupportedError);
}

TEST_CASE("simplex projection") {
    std::mt19937_64 rng(52);
    for (int t = 0; t < 200; ++t) {
        Vector z = testutil::uniform(rng, 5, -1, 2);
        Vector p = project_to_simplex(z);
        CHECK(p.sum() == doctest::Approx(1.0));
        CHECK(p.minCoeff() >= 0);
        // optimality against random simplex points
        for (int k = 0; k < 10; ++k) {
            Vector q = project_to_simplex(testutil::uniform(rng, 5, -1, 2));
            CHECK((z - p).dot(q - p) <= 1e-12);
        }
    }
}

TEST_CASE("robustness to adversarial evaluation error") {
    std::mt19937_64 rng(53);
    const double eps = 1e-2;
    int within = 0, runs = 0;
    for (int t = 0; t < 20; ++t, ++runs) {
        const int d = 1 + t % 3;
        Quadratic q = random_quadratic(rng, d);
        std::mt19937_64 adversary(1000 + t);
        std::bernoulli_distribution coin(0.5);
        ApproxEvaluator f([&](const Vector& x) { return q(x) + (coin(adversary) ? 1 : -1) * eps / d; });
        ZooConfig cfg;
        cfg.epsilon = eps;
        cfg.seed = std::uint64_t(t);
        auto r = minimize(f, round_set(FeasibleSet::cube(d, 0, 1)), cfg);
        const double gap = q(r.x) - cube_minimum(q);
        CHECK(gap <= 2 * eps);
        within += gap <= eps;
    }
    CHECK(within >= 0.9 * runs);
}

TEST_CASE("same seed, same answer") {
    std::mt19937_64 rng(54);
    Quadratic q = random_quadratic(rng, 2);
    for (auto method : {ZooMethod::GridRefine, ZooMethod::SmoothedGradient}) {
        ZooConfig cfg;
        cfg.epsilon = 0.05;
        cfg.method = method;
        cfg.seed = 9;
        cfg.budget = 4000;
        ApproxEvaluator f1([&](const Vector& x) { return q(x); }), f2([&](const Vector& x) { return q(x); });
        auto a = minimize(f1, round_set(FeasibleSet::cube(2, 0, 1)), cfg);
        auto b = minimize(f2, round_set(FeasibleSet::cube(2, 0, 1)), cfg);
        CHECK(a.x == b.x);
    }
}

TEST_CASE("smoothed gradient improves with budget") {
    const double eps = 0.05;
    std::vector<double> medians;
    for (long budget : {100L, 1000L, 10000L}) {
        std::mt19937_64 rng(55);
        std::vector<double> gaps;
        for (int t = 0; t < 9; ++t) {
            Quadratic q = random_quadratic(rng, 4);
            std::mt19937_64 noise(t);
            std::uniform_real_distribution<double> U(-1, 1);
            ApproxEvaluator f([&](const Vector& x) { return q(x) + eps / 4 * U(noise); });
            ZooConfig cfg;
            cfg.epsilon = eps;
            cfg.method = ZooMethod::SmoothedGradient;
            cfg.budget = budget;
            cfg.seed = std::uint64_t(t);
            auto r = minimize(f, round_set(FeasibleSet::cube(4, 0, 1)), cfg);
            CHECK(r.evaluations <= budget);
            gaps.push_back(q(r.x) - cube_minimum(q));
        }
        std::nth_element(gaps.begin(), gaps.begin() + 4, gaps.end());
        medians.push_back(gaps[4]);
    }
    CHECK(medians[1] <= medians[0]);
    CHECK(medians[2] <= medians[1]);
    CHECK(medians[2] <= 2 * eps);
}

TEST_CASE("budget exhaustion is flagged") {
    ApproxEvaluator f([](const Vector& x) { return x.squaredNorm(); });
    ZooConfig cfg;
    cfg.budget = 10;
    auto r = minimize(f, round_set(FeasibleSet::cube(2, -1, 1)), cfg);
    CHECK_FALSE(r.certified);
    CHECK(f.calls() == 10);
    cfg.method = ZooMethod::GridRefine;
    CHECK_THROWS_AS(minimize(f, round_set(FeasibleSet::cube(4, 0, 1)), cfg), UnsupportedError);
    CHECK(default_zoo_budget(2, 0.01) == 200000);
    CHECK(default_zoo_budget(3, 1e-4) == 1000000);
}
