#include "stackel/schedules.hpp"

#include <cmath>
#include <numbers>

#include "stackel/errors.hpp"

namespace stackel {

namespace {
void positive(double x, const char* name) {
    if (!(x > 0)) throw UsageError(std::string("schedule parameter must be positive: ") + name);
}
}  // namespace

PriceSchedule learn_price_schedule(int d, double lambda_val, double holder_beta, double gamma, double epsilon,
                                   double sigma, double t_constant) {
    positive(d, "d");
    positive(lambda_val, "lambda");
    positive(gamma, "gamma");
    positive(epsilon, "epsilon");
    positive(sigma, "sigma");
    if (!(holder_beta > 0 && holder_beta <= 1)) throw UsageError("Hoelder exponent must lie in (0, 1]");
    PriceSchedule s;
    s.L = std::pow(lambda_val, 1.0 / holder_beta) *
          std::pow(4.0 / (epsilon * epsilon * sigma), (1.0 - holder_beta) / holder_beta);
    s.T = t_constant * d * s.L * s.L * gamma * gamma / (std::pow(epsilon, 4) * sigma * sigma);
    s.eta = std::sqrt(2.0) * gamma / (s.L * std::sqrt(d * s.T));
    s.price_radius = std::sqrt(double(d)) * s.L;
    return s;
}

LeadSchedule learn_lead_schedule(int d, double lambda_F, double gamma, double epsilon, double sigma,
                                 double zeta) {
    positive(d, "d");
    positive(lambda_F, "lambda_F");
    positive(gamma, "gamma");
    positive(epsilon, "epsilon");
    positive(sigma, "sigma");
    const double margin = epsilon * epsilon * sigma - 4.0 * zeta;
    if (!(margin > 0)) throw ConfigError("follower error too large for the requested accuracy");
    LeadSchedule s;
    s.T = std::pow(16.0 * std::sqrt(2.0 * d) * lambda_F * gamma / margin, 2);
    s.eta = std::sqrt(2.0) * gamma / (std::sqrt(double(d)) * lambda_F * std::sqrt(s.T));
    s.radius = std::sqrt(double(d)) * lambda_F;
    return s;
}

LeadSchedule learn_price_noisy_schedule(int d, double gamma, double epsilon, double sigma, double t_constant) {
    positive(d, "d");
    positive(gamma, "gamma");
    positive(epsilon, "epsilon");
    positive(sigma, "sigma");
    LeadSchedule s;
    s.T = t_constant * d * gamma * gamma / (std::pow(epsilon, 4) * sigma * sigma);
    s.eta = std::sqrt(2.0) * gamma / (std::sqrt(double(d)) * std::sqrt(s.T));
    s.radius = std::sqrt(double(d));
    return s;
}

LeadSchedule target_flow_schedule(int m, double delta, double sigma) {
    positive(m, "m");
    positive(delta, "delta");
    positive(sigma, "sigma");
    LeadSchedule s;
    s.T = 16.0 * std::pow(m, 3) / (std::pow(delta, 4) * sigma * sigma);
    s.eta = 2.0 * std::pow(m, 1.5) / std::sqrt(s.T);
    s.radius = 2.0 * m;
    return s;
}

double ellipsoid_price_iterations(int d, double lambda_val, double gamma, double epsilon, double sigma) {
    return 100.0 * d * d * std::log(d * lambda_val * gamma / (epsilon * sigma));
}

double ellipsoid_toll_iterations(int m, double epsilon, double sigma) {
    return 100.0 * m * m * std::log(m / (epsilon * sigma));
}

ProfitSchedule profit_schedule(double alpha, double lambda_val, double lambda_cost, int d, double gamma,
                               double holder_beta) {
    positive(alpha, "alpha");
    positive(gamma, "gamma");
    const double lambda = lambda_val + lambda_cost;
    ProfitSchedule s;
    const double a = std::pow(alpha / (lambda * (d + 1 + std::pow(12.0 * gamma, holder_beta))), 1.0 / holder_beta);
    s.epsilon = std::min(a, 1.0 / (12.0 * gamma));
    s.delta = 4.0 * s.epsilon;
    s.zoo_alpha = d * std::pow(s.epsilon, holder_beta) * lambda;
    return s;
}

double gaussian_anticoncentration() { return std::numbers::ln2 / (2.0 * std::numbers::pi); }

NoisyProfitSchedule noisy_profit_schedule(double alpha, double gamma, int d, double failure_prob,
                                          double zoo_iterations) {
    positive(alpha, "alpha");
    positive(failure_prob, "failure probability");
    positive(zoo_iterations, "zoo iterations");
    NoisyProfitSchedule s;
    s.epsilon = alpha / (12.0 * gamma + 3.0 * d);
    s.delta = 2.0 * s.epsilon;
    s.zoo_alpha = 3.0 * d * s.epsilon;
    s.beta_prime = failure_prob / (2.0 * zoo_iterations);
    s.samples = 2.0 * d * std::log(2.0 / s.beta_prime) / (gaussian_anticoncentration() * s.epsilon * s.epsilon);
    return s;
}

OptSchedule general_schedule(double alpha, double lambda_leader, int d) {
    positive(alpha, "alpha");
    positive(lambda_leader, "lambda_L");
    OptSchedule s;
    s.epsilon = alpha / (lambda_leader * (d + 1));
    s.zoo_alpha = d * s.epsilon * lambda_leader;
    return s;
}

}  // namespace stackel
