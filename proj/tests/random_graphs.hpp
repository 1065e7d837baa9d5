#pragma once

#include <random>
#include <set>
#include <string>

#include "stackel/routing.hpp"

namespace testutil {

// Connected graph on 3..8 nodes: a backbone chain plus random extra edges, strictly increasing
// affine or cubic latencies, one or two commodities.
inline stackel::RoutingGame random_game(std::mt19937_64& rng) {
    using namespace stackel;
    std::uniform_int_distribution<int> nn(3, 8);
    std::uniform_real_distribution<double> U(0, 1);
    const int n = nn(rng);
    std::vector<std::string> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back("v" + std::to_string(i));
    std::vector<Edge> edges;
    auto latency = [&]() {
        if (U(rng) < 0.6) return Latency(AffineLatency{0.1 + 1.9 * U(rng), U(rng)});
        return Latency(PolynomialLatency{{U(rng), 0.1 + U(rng), 0.0, U(rng)}});
    };
    for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, latency()});
    std::uniform_int_distribution<int> pick(0, n - 1);
    const int extra = n + pick(rng);
    for (int k = 0; k < extra; ++k) {
        int a = pick(rng), b = pick(rng);
        if (a == b) continue;
        if (a > b) std::swap(a, b);   // keep it acyclic so path counts stay small
        edges.push_back({a, b, latency()});
    }
    std::vector<Commodity> comms;
    if (U(rng) < 0.5) {
        comms.push_back({0, n - 1, 1.0});
    } else {
        const double share = 0.3 + 0.4 * U(rng);
        comms.push_back({0, n - 1, share});
        comms.push_back({std::uniform_int_distribution<int>(0, n - 2)(rng), n - 1, 1.0 - share});
    }
    return RoutingGame(nodes, edges, comms);
}

}  // namespace testutil
