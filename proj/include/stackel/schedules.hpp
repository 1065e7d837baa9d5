#pragma once

// Closed-form iteration counts, step sizes and accuracy splits for the learning loops.
// Pure functions; the loops themselves may run with overridden T / eta.

namespace stackel {

struct PriceSchedule {
    double L;             // bound on the norm of inducing prices
    double T;             // iteration count (real; ceil before use)
    double eta;           // step size
    double price_radius;  // sqrt(d) * L
};

// lambda, beta: Hoelder constants of the valuation. t_constant is 32 by default; 16 is the
// tighter variant.
PriceSchedule learn_price_schedule(int d, double lambda_val, double holder_beta, double gamma, double epsilon,
                                   double sigma, double t_constant = 32.0);

struct LeadSchedule {
    double T;
    double eta;
    double radius;
};

// Lipschitz leader-follower coupling with constant lambda_F, follower error zeta.
LeadSchedule learn_lead_schedule(int d, double lambda_F, double gamma, double epsilon, double sigma,
                                 double zeta = 0.0);

// Contract learning under noisy responses; prices live in the ball of radius sqrt(d).
LeadSchedule learn_price_noisy_schedule(int d, double gamma, double epsilon, double sigma,
                                        double t_constant = 32.0);

// Toll dual ascent on m edges toward a target flow at accuracy delta.
LeadSchedule target_flow_schedule(int m, double delta, double sigma);

double ellipsoid_price_iterations(int d, double lambda_val, double gamma, double epsilon, double sigma);
double ellipsoid_toll_iterations(int m, double epsilon, double sigma);

struct ProfitSchedule {
    double epsilon;     // induction accuracy per query
    double delta;       // interior shrink
    double zoo_alpha;   // accuracy demanded from the zeroth-order optimizer
};

ProfitSchedule profit_schedule(double alpha, double lambda_val, double lambda_cost, int d, double gamma,
                               double holder_beta);

struct NoisyProfitSchedule {
    double epsilon;
    double delta;
    double zoo_alpha;
    double beta_prime;   // per-evaluation failure probability
    double samples;      // s, realized utilities averaged per evaluation
};

// Gaussian anti-concentration constant ln 2 / (2 pi).
double gaussian_anticoncentration();

NoisyProfitSchedule noisy_profit_schedule(double alpha, double gamma, int d, double failure_prob,
                                          double zoo_iterations);

struct OptSchedule {
    double epsilon;
    double zoo_alpha;
};

OptSchedule general_schedule(double alpha, double lambda_leader, int d);

}  // namespace stackel
