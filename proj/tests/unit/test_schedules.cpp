#include <cmath>

#include "doctest.h"
#include "stackel/errors.hpp"
#include "stackel/leader.hpp"
#include "stackel/schedules.hpp"

using namespace stackel;

// Reference values below were worked out by hand (and double-checked in a calculator).
constexpr double rel = 1e-9;

TEST_CASE("pricing loop schedule") {
    auto s = learn_price_schedule(2, 1.0, 1.0, std::sqrt(2.0), 0.1, 0.25);
    CHECK(s.L == doctest::Approx(1.0).epsilon(rel));
    CHECK(s.T == doctest::Approx(20479999.999999996).epsilon(rel));
    CHECK(s.eta == doctest::Approx(std::sqrt(2.0) * std::sqrt(2.0) / std::sqrt(2.0 * 20480000.0)).epsilon(rel));
    CHECK(s.price_radius == doctest::Approx(std::sqrt(2.0)).epsilon(rel));
}

TEST_CASE("leader-follower loop schedule, with and without follower error") {
    auto s = learn_lead_schedule(2, 1.0, std::sqrt(2.0), 0.1, 0.25);
    CHECK(s.T == doctest::Approx(327680000.0).epsilon(rel));
    CHECK(s.radius == doctest::Approx(std::sqrt(2.0)).epsilon(rel));
    auto z = learn_lead_schedule(2, 1.0, std::sqrt(2.0), 0.1, 0.25, 1e-4);
    CHECK(z.T == doctest::Approx(464399092.9705216).epsilon(rel));
    CHECK_THROWS_AS(learn_lead_schedule(2, 1.0, std::sqrt(2.0), 0.1, 0.25, 7e-4), ConfigError);
}

TEST_CASE("toll loop schedule") {
    auto s = target_flow_schedule(3, 0.01, 0.5);
    CHECK(s.T == doctest::Approx(172800000000.0).epsilon(rel));
    CHECK(s.eta == doctest::Approx(2.4999999999999998e-05).epsilon(rel));
    CHECK(s.radius == doctest::Approx(6.0).epsilon(rel));
}

TEST_CASE("ellipsoid iteration counts") {
    CHECK(ellipsoid_price_iterations(2, 1.0, std::sqrt(2.0), 0.1, 0.25) ==
          doctest::Approx(1891.4400899815416).epsilon(rel));
    CHECK(ellipsoid_toll_iterations(2, 0.01, 1.0) == doctest::Approx(2119.3269466192146).epsilon(rel));
}

TEST_CASE("profit maximization schedule") {
    auto s = profit_schedule(0.02, 1.0, 1.0, 1, 1.0, 0.5);
    CHECK(s.epsilon == doctest::Approx(3.3493649053890347e-06).epsilon(rel));
    CHECK(s.delta == doctest::Approx(1.3397459621556139e-05).epsilon(rel));
    CHECK(s.zoo_alpha == doctest::Approx(0.003660254037844387).epsilon(rel));
    // coarse alpha hits the 1/(12 gamma) cap
    CHECK(profit_schedule(100.0, 1.0, 1.0, 1, 1.0, 1.0).epsilon == doctest::Approx(1.0 / 12).epsilon(rel));
}

TEST_CASE("noisy contract schedule") {
    CHECK(gaussian_anticoncentration() == doctest::Approx(0.1103178000763258).epsilon(rel));
    // d = 2, gamma = 1: alpha = 0.9 gives eps = 0.05; 0.1 / (2 * 5) gives beta' = 0.01
    auto s = noisy_profit_schedule(0.9, 1.0, 2, 0.1, 5.0);
    CHECK(s.epsilon == doctest::Approx(0.05).epsilon(rel));
    CHECK(s.delta == doctest::Approx(0.1).epsilon(rel));
    CHECK(s.zoo_alpha == doctest::Approx(0.3).epsilon(rel));
    CHECK(s.beta_prime == doctest::Approx(0.01).epsilon(rel));
    CHECK(s.samples == doctest::Approx(76844.42384285806).epsilon(rel));
    CHECK(scaled_sample_count(s.samples, 0.02) == 31);
    CHECK(scaled_sample_count(s.samples, 0.0) == 1);
}

TEST_CASE("general leader schedule") {
    auto s = general_schedule(0.02, 2.0, 3);
    CHECK(s.epsilon == doctest::Approx(0.0025).epsilon(rel));
    CHECK(s.zoo_alpha == doctest::Approx(0.015).epsilon(rel));
}
