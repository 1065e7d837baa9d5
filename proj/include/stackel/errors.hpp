#pragma once

#include <stdexcept>
#include <string>

namespace stackel {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller passed arguments that violate a documented precondition.
class UsageError : public Error {
public:
    using Error::Error;
};

// Point outside the region where a valuation is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

// Operation not defined for this variant (e.g. homogeneity of a quadratic).
class NotHomogeneousError : public Error {
public:
    using Error::Error;
};

// A documented input contract was broken (e.g. a target outside the follower's set).
class ContractViolation : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ModelError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// An iterative loop ran out of iterations before meeting its target.
class BudgetExhausted : public Error {
public:
    BudgetExhausted(const std::string& what, double achieved)
        : Error(what), achieved_(achieved) {}
    double achieved() const { return achieved_; }

private:
    double achieved_;
};

}  // namespace stackel
