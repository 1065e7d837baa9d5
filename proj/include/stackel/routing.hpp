#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "stackel/follower.hpp"
#include "stackel/vector.hpp"

namespace stackel {

struct AffineLatency {
    double a;   // slope
    double b;   // free-flow latency
};

struct PolynomialLatency {
    std::vector<double> coeffs;   // c0 + c1 x + c2 x^2 + ...
};

class Latency {
public:
    using Variant = std::variant<AffineLatency, PolynomialLatency>;
    Latency(Variant v) : v_(std::move(v)) {}
    const Variant& variant() const { return v_; }
    double value(double x) const;
    double derivative(double x) const;
    double integral(double x) const;   // int_0^x
    // smallest slope on [0, upper]
    double min_slope(double upper) const;
    bool affine() const;

private:
    Variant v_;
};

struct Edge {
    int tail;
    int head;
    Latency latency;
};

struct Commodity {
    int source;
    int sink;
    double demand;
};

using Path = std::vector<int>;   // edge indices, source to sink

class RoutingGame {
public:
    RoutingGame(std::vector<std::string> nodes, std::vector<Edge> edges, std::vector<Commodity> commodities);

    // "tail head affine a b" | "tail head poly c0 c1 ..." | "commodity source sink demand"
    static RoutingGame parse(const std::string& text);
    static RoutingGame two_link();
    static RoutingGame braess();

    int num_nodes() const { return int(nodes_.size()); }
    int num_edges() const { return int(edges_.size()); }
    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<Commodity>& commodities() const { return commodities_; }
    double total_demand() const;
    double min_slope() const;

    // Simple source-sink paths of a commodity in depth-first edge order. Throws UnsupportedError
    // beyond `limit` paths.
    std::vector<Path> paths(int commodity, int limit = 4096) const;

    Vector edge_latencies(const Vector& f) const;

private:
    std::vector<std::string> nodes_;
    std::vector<Edge> edges_;
    std::vector<Commodity> commodities_;
};

struct PathFlow {
    Path path;
    double flow;
};

struct Flow {
    Vector edge;
    std::vector<std::vector<PathFlow>> paths;   // per commodity, positive entries only
};

// Beckmann potential plus toll payments.
double potential(const RoutingGame& g, const Vector& edge_flow, const Vector& tolls);
// Total latency, tolls excluded.
double social_cost(const RoutingGame& g, const Vector& edge_flow);
// Frank-Wolfe gap and worst used-path excess of a path decomposition.
struct FlowCertificate {
    double fw_gap;
    double path_gap;
};
FlowCertificate certificate(const RoutingGame& g, const Flow& f, const Vector& tolls, double used_threshold = 1e-9);

struct EquilibriumOptions {
    double tol = 1e-7;
    long max_iter = 200000;
    std::uint64_t start_seed = 0;   // 0: all demand on free-flow shortest paths; else random paths
    const Flow* warm_start = nullptr;
    bool record_potential = false;
};

struct EquilibriumResult {
    Flow flow;
    FlowCertificate cert;
    long iterations = 0;
    std::vector<double> potential_trace;
};

// Pairwise Frank-Wolfe on the tolled potential with shortest-path linear minimization and exact line
// search. Stops once the gap is <= sigma_min tol^2 / 2 and every used path is within tol of shortest.
EquilibriumResult wardrop_equilibrium(const RoutingGame& g, const Vector& tolls, const EquilibriumOptions& opts = {});

// Single-commodity, affine latencies: equilibrium by enumerating path supports in index order. Works
// without strict monotonicity; ties go to the first support.
Flow equilibrium_by_enumeration(const RoutingGame& g, const Vector& tolls);

// Sends each commodity's demand along given path-flow splits and returns edge flows.
Vector edge_flow_of_paths(const RoutingGame& g, const std::vector<std::vector<PathFlow>>& paths);

// Social cost of the six-edge Braess network with tolls on the two A->B edges.
double braess_social_cost(double toll_left, double toll_right);

// Follower population as a responder: tolls in, equilibrium edge flows out.
class EquilibriumOracle : public Responder {
public:
    explicit EquilibriumOracle(RoutingGame g, double tol = 1e-8);
    Vector respond(const Vector& tolls) override;
    long queries() const override { return queries_; }
    int action_dim() const override { return game_.num_edges(); }
    int response_dim() const override { return game_.num_edges(); }
    Incentive incentive() const override { return Incentive::Charge; }
    const RoutingGame& game() const { return game_; }
    const Flow& last_flow() const { return last_; }

private:
    RoutingGame game_;
    double tol_;
    long queries_ = 0;
    bool have_last_ = false;
    Flow last_;
};

}  // namespace stackel
