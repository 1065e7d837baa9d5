#pragma once

#include <random>

#include "stackel/vector.hpp"

namespace testutil {

inline stackel::Vector vec(std::initializer_list<double> xs) {
    stackel::Vector v(xs.size());
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

inline stackel::Vector uniform(std::mt19937_64& rng, int d, double lo, double hi) {
    std::uniform_real_distribution<double> U(lo, hi);
    stackel::Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = U(rng);
    return v;
}

inline stackel::Vector unit(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> N(0, 1);
    stackel::Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = N(rng);
    return v.normalized();
}

}  // namespace testutil
