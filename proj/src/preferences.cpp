#include "stackel/preferences.hpp"

#include <cmath>

#include "stackel/errors.hpp"

namespace stackel {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate(const CES& c) {
    if (c.alpha.size() == 0 || (c.alpha.array() <= 0).any()) throw UsageError("CES weights must be positive");
    if (!(c.rho > 0 && c.rho < 1)) throw UsageError("CES rho must lie in (0, 1)");
    if (!(c.beta > 0)) throw UsageError("CES beta must be positive");
    if (!(c.rho * c.beta < 1)) throw UsageError("CES needs rho * beta < 1");
}

void validate(const CobbDouglas& c) {
    if (c.alpha.size() == 0 || (c.alpha.array() <= 0).any())
        throw UsageError("Cobb-Douglas exponents must be positive");
    if (!(c.alpha.sum() < 1)) throw UsageError("Cobb-Douglas exponents must sum to less than 1");
}

void validate(const QuadraticValuation& c) {
    if (c.a.size() == 0 || !(c.q > 0)) throw UsageError("quadratic valuation needs q > 0");
}

}  // namespace

Valuation::Valuation(Variant v, double bound, double floor) : v_(std::move(v)), bound_(bound), floor_(floor) {
    std::visit([](const auto& x) { validate(x); }, v_);
    if (!(bound_ > 0)) throw UsageError("region bound must be positive");
    if (floor_ < 0) floor_ = 1e-4 * bound_;
    if (!(floor_ > 0 && floor_ < bound_)) throw UsageError("region floor must lie in (0, bound)");
}

int Valuation::dim() const {
    return std::visit(overloaded{
                          [](const CES& c) { return int(c.alpha.size()); },
                          [](const CobbDouglas& c) { return int(c.alpha.size()); },
                          [](const QuadraticValuation& c) { return int(c.a.size()); },
                      },
                      v_);
}

bool Valuation::homogeneous() const { return !std::holds_alternative<QuadraticValuation>(v_); }

void Valuation::check_point(const Vector& x) const {
    if (x.size() != dim()) throw UsageError("valuation: dimension mismatch");
    if (homogeneous() && (x.array() <= 0).any())
        throw DomainError("valuation evaluated at a point with a nonpositive coordinate");
}

double Valuation::value(const Vector& x) const {
    check_point(x);
    return std::visit(overloaded{
                          [&](const CES& c) {
                              double s = (c.alpha.array() * x.array().pow(c.rho)).sum();
                              return std::pow(s, c.beta);
                          },
                          [&](const CobbDouglas& c) { return std::exp((c.alpha.array() * x.array().log()).sum()); },
                          [&](const QuadraticValuation& c) { return c.a.dot(x) - 0.5 * c.q * x.squaredNorm(); },
                      },
                      v_);
}

Vector Valuation::gradient(const Vector& x) const {
    check_point(x);
    return std::visit(overloaded{
                          [&](const CES& c) -> Vector {
                              double s = (c.alpha.array() * x.array().pow(c.rho)).sum();
                              double outer = c.beta * std::pow(s, c.beta - 1.0);
                              return (outer * c.rho * c.alpha.array() * x.array().pow(c.rho - 1.0)).matrix();
                          },
                          [&](const CobbDouglas& c) -> Vector {
                              double v = std::exp((c.alpha.array() * x.array().log()).sum());
                              return (v * c.alpha.array() / x.array()).matrix();
                          },
                          [&](const QuadraticValuation& c) -> Vector { return c.a - c.q * x; },
                      },
                      v_);
}

double Valuation::degree() const {
    return std::visit(overloaded{
                          [](const CES& c) { return c.rho * c.beta; },
                          [](const CobbDouglas& c) { return c.alpha.sum(); },
                          [](const QuadraticValuation&) -> double {
                              throw NotHomogeneousError("quadratic valuation has no homogeneity degree");
                          },
                      },
                      v_);
}

double Valuation::strong_concavity() const {
    const double H = bound_;
    return std::visit(
        overloaded{
            [&](const CES& c) {
                const double amin = c.alpha.minCoeff();
                const double scale = c.beta * c.rho * (1.0 - c.rho) * std::pow(H, c.rho * c.beta - 2.0);
                if (c.beta <= 1.0) return scale * std::pow(c.alpha.sum(), c.beta - 1.0) * amin;
                const double kappa = (c.beta - 1.0) * c.rho / (1.0 - c.rho);
                return scale * (1.0 - kappa) * std::pow(amin, c.beta);
            },
            [&](const CobbDouglas& c) {
                const double k = c.alpha.sum();
                return std::pow(H, k - 2.0) * (1.0 - k) * c.alpha.minCoeff();
            },
            [](const QuadraticValuation& c) { return c.q; },
        },
        v_);
}

double Valuation::holder_constant() const {
    const int d = dim();
    return std::visit(overloaded{
                          [&](const CES& c) { return std::pow(c.alpha.maxCoeff() * d, c.beta); },
                          [](const CobbDouglas&) { return 1.0; },
                          [&](const QuadraticValuation& c) {
                              return c.a.norm() + c.q * bound_ * std::sqrt(double(d));
                          },
                      },
                      v_);
}

double Valuation::holder_exponent() const {
    return std::visit(overloaded{
                          [](const CES& c) { return c.rho * c.beta; },
                          [](const CobbDouglas& c) { return c.alpha.sum(); },
                          [](const QuadraticValuation&) { return 1.0; },
                      },
                      v_);
}

CostFunction::CostFunction(Variant v) : v_(std::move(v)) {
    std::visit(overloaded{
                   [](const LinearCost& c) {
                       if (c.c.size() == 0) throw UsageError("cost needs a coefficient vector");
                   },
                   [](const QuadraticCost& c) {
                       if (c.c.size() == 0 || c.q < 0) throw UsageError("quadratic cost needs q >= 0");
                   },
               },
               v_);
}

int CostFunction::dim() const {
    return std::visit([](const auto& c) { return int(c.c.size()); }, v_);
}

double CostFunction::value(const Vector& x) const {
    return std::visit(overloaded{
                          [&](const LinearCost& c) { return c.c.dot(x); },
                          [&](const QuadraticCost& c) { return c.c.dot(x) + 0.5 * c.q * x.squaredNorm(); },
                      },
                      v_);
}

Vector CostFunction::gradient(const Vector& x) const {
    return std::visit(overloaded{
                          [&](const LinearCost& c) -> Vector { return c.c; },
                          [&](const QuadraticCost& c) -> Vector { return c.c + c.q * x; },
                      },
                      v_);
}

double CostFunction::lipschitz(double bound) const {
    return std::visit(overloaded{
                          [](const LinearCost& c) { return c.c.norm(); },
                          [&](const QuadraticCost& c) {
                              return c.c.norm() + c.q * bound * std::sqrt(double(c.c.size()));
                          },
                      },
                      v_);
}

double profit_of_bundle(const Valuation& v, const CostFunction& c, const Vector& x) {
    return v.degree() * v.value(x) - c.value(x);
}

}  // namespace stackel
