#include "stackel/routing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <sstream>

#include "stackel/errors.hpp"

namespace stackel {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double Latency::value(double x) const {
    return std::visit(overloaded{
                          [&](const AffineLatency& l) { return l.a * x + l.b; },
                          [&](const PolynomialLatency& l) {
                              double s = 0;
                              for (auto it = l.coeffs.rbegin(); it != l.coeffs.rend(); ++it) s = s * x + *it;
                              return s;
                          },
                      },
                      v_);
}

double Latency::derivative(double x) const {
    return std::visit(overloaded{
                          [&](const AffineLatency& l) { return l.a; },
                          [&](const PolynomialLatency& l) {
                              double s = 0;
                              for (size_t k = l.coeffs.size(); k-- > 1;) s = s * x + double(k) * l.coeffs[k];
                              return s;
                          },
                      },
                      v_);
}

double Latency::integral(double x) const {
    return std::visit(overloaded{
                          [&](const AffineLatency& l) { return 0.5 * l.a * x * x + l.b * x; },
                          [&](const PolynomialLatency& l) {
                              double s = 0;
                              for (size_t k = l.coeffs.size(); k-- > 0;) s = s * x + l.coeffs[k] / double(k + 1);
                              return s * x;
                          },
                      },
                      v_);
}

double Latency::min_slope(double upper) const {
    if (const auto* a = std::get_if<AffineLatency>(&v_)) return a->a;
    double m = kInf;
    const int n = 1000;
    for (int i = 0; i <= n; ++i) m = std::min(m, derivative(upper * i / n));
    return m;
}

bool Latency::affine() const {
    if (std::holds_alternative<AffineLatency>(v_)) return true;
    const auto& c = std::get<PolynomialLatency>(v_).coeffs;
    for (size_t k = 2; k < c.size(); ++k)
        if (c[k] != 0.0) return false;
    return true;
}

RoutingGame::RoutingGame(std::vector<std::string> nodes, std::vector<Edge> edges,
                         std::vector<Commodity> commodities)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), commodities_(std::move(commodities)) {
    const int n = num_nodes();
    if (edges_.empty()) throw ModelError("routing game without edges");
    if (commodities_.empty()) throw ModelError("routing game without commodities");
    for (const auto& e : edges_) {
        if (e.tail < 0 || e.tail >= n || e.head < 0 || e.head >= n) throw ModelError("edge endpoint out of range");
        if (e.tail == e.head) throw ModelError("self-loop edges are not allowed");
    }
    for (const auto& c : commodities_) {
        if (c.source < 0 || c.source >= n || c.sink < 0 || c.sink >= n) throw ModelError("commodity endpoint out of range");
        if (c.source == c.sink) throw ModelError("commodity source equals sink");
        if (!(c.demand > 0)) throw ModelError("commodity demand must be positive");
    }
    if (std::abs(total_demand() - 1.0) > 1e-9) throw ModelError("total demand must equal 1");
    const double D = total_demand();
    for (size_t i = 0; i < edges_.size(); ++i) {
        const auto& l = edges_[i].latency;
        if (l.value(0.0) < 0) throw ModelError("edge " + std::to_string(i) + ": negative free-flow latency");
        if (l.min_slope(D) < -1e-12) throw ModelError("edge " + std::to_string(i) + ": latency must be nondecreasing");
    }
}

double RoutingGame::total_demand() const {
    double s = 0;
    for (const auto& c : commodities_) s += c.demand;
    return s;
}

double RoutingGame::min_slope() const {
    double m = kInf;
    for (const auto& e : edges_) m = std::min(m, e.latency.min_slope(total_demand()));
    return std::max(m, 0.0);
}

Vector RoutingGame::edge_latencies(const Vector& f) const {
    Vector l(num_edges());
    for (int i = 0; i < num_edges(); ++i) l[i] = edges_[i].latency.value(f[i]);
    return l;
}

std::vector<Path> RoutingGame::paths(int commodity, int limit) const {
    const auto& c = commodities_.at(commodity);
    std::vector<Path> out;
    std::vector<bool> on_path(num_nodes(), false);
    Path cur;
    std::function<void(int)> dfs = [&](int v) {
        if (v == c.sink) {
            out.push_back(cur);
            if (int(out.size()) > limit)
                throw UnsupportedError("more than " + std::to_string(limit) + " paths for a commodity");
            return;
        }
        on_path[v] = true;
        for (int e = 0; e < num_edges(); ++e) {
            if (edges_[e].tail != v || on_path[edges_[e].head]) continue;
            cur.push_back(e);
            dfs(edges_[e].head);
            cur.pop_back();
        }
        on_path[v] = false;
    };
    dfs(c.source);
    return out;
}

RoutingGame RoutingGame::parse(const std::string& text) {
    std::vector<std::string> nodes;
    std::map<std::string, int> index;
    auto node = [&](const std::string& name) {
        auto it = index.find(name);
        if (it != index.end()) return it->second;
        index[name] = int(nodes.size());
        nodes.push_back(name);
        return int(nodes.size()) - 1;
    };
    std::vector<Edge> edges;
    std::vector<Commodity> comms;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) { throw ModelError("line " + std::to_string(lineno) + ": " + msg); };
    auto number = [&](const std::string& tok) {
        try {
            size_t pos = 0;
            double v = std::stod(tok, &pos);
            if (pos != tok.size() || !std::isfinite(v)) fail("not a number: '" + tok + "'");
            return v;
        } catch (const std::logic_error&) {
            fail("not a number: '" + tok + "'");
        }
        return 0.0;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        if (tok[0] == "commodity") {
            if (tok.size() != 4) fail("expected 'commodity source sink demand'");
            const int s = node(tok[1]), t = node(tok[2]);
            comms.push_back({s, t, number(tok[3])});
            continue;
        }
        if (tok.size() < 3) fail("expected 'tail head variant params...'");
        const int a = node(tok[0]), b = node(tok[1]);
        std::vector<double> params;
        for (size_t i = 3; i < tok.size(); ++i) params.push_back(number(tok[i]));
        if (tok[2] == "affine") {
            if (params.size() != 2) fail("affine latency takes 'a b' (a x + b)");
            edges.push_back({a, b, Latency(AffineLatency{params[0], params[1]})});
        } else if (tok[2] == "poly") {
            if (params.empty()) fail("poly latency needs coefficients");
            edges.push_back({a, b, Latency(PolynomialLatency{params})});
        } else {
            fail("unknown latency variant '" + tok[2] + "'");
        }
    }
    return RoutingGame(std::move(nodes), std::move(edges), std::move(comms));
}

RoutingGame RoutingGame::two_link() {
    return RoutingGame({"s", "t"},
                       {{0, 1, Latency(AffineLatency{1.0, 0.0})}, {0, 1, Latency(AffineLatency{0.5, 0.5})}},
                       {{0, 1, 1.0}});
}

RoutingGame RoutingGame::braess() {
    // S=0 A=1 B=2 T=3; edges 4 and 5 are the two A->B links that carry tolls
    return RoutingGame({"S", "A", "B", "T"},
                       {
                           {0, 1, Latency(AffineLatency{0.4, 0.0})},
                           {0, 2, Latency(AffineLatency{0.0, 0.5})},
                           {2, 3, Latency(AffineLatency{0.4, 0.0})},
                           {1, 3, Latency(AffineLatency{0.0, 0.5})},
                           {1, 2, Latency(AffineLatency{0.0, 0.005})},
                           {1, 2, Latency(AffineLatency{0.0, 0.0})},
                       },
                       {{0, 3, 1.0}});
}

double potential(const RoutingGame& g, const Vector& f, const Vector& tolls) {
    double s = 0;
    for (int i = 0; i < g.num_edges(); ++i) s += g.edges()[i].latency.integral(f[i]) + tolls[i] * f[i];
    return s;
}

double social_cost(const RoutingGame& g, const Vector& f) {
    if (f.size() != g.num_edges()) throw UsageError("social_cost: dimension mismatch");
    double s = 0;
    for (int i = 0; i < g.num_edges(); ++i) s += f[i] * g.edges()[i].latency.value(f[i]);
    return s;
}

Vector edge_flow_of_paths(const RoutingGame& g, const std::vector<std::vector<PathFlow>>& paths) {
    Vector f = Vector::Zero(g.num_edges());
    for (const auto& comm : paths)
        for (const auto& pf : comm)
            for (int e : pf.path) f[e] += pf.flow;
    return f;
}

namespace {

double path_cost(const Path& p, const Vector& costs) {
    double s = 0;
    for (int e : p) s += costs[e];
    return s;
}

// Dijkstra on nonnegative edge costs; returns the edge list of a shortest path.
Path shortest_path(const RoutingGame& g, int source, int sink, const Vector& costs) {
    const int n = g.num_nodes();
    std::vector<double> dist(n, kInf);
    std::vector<int> pred(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[source] = 0;
    pq.push({0.0, source});
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[v]) continue;
        for (int e = 0; e < g.num_edges(); ++e) {
            if (g.edges()[e].tail != v) continue;
            const int w = g.edges()[e].head;
            const double nd = d + costs[e];
            if (nd < dist[w]) {
                dist[w] = nd;
                pred[w] = e;
                pq.push({nd, w});
            }
        }
    }
    if (dist[sink] == kInf)
        throw ModelError("commodity " + g.nodes()[source] + " -> " + g.nodes()[sink] + " is disconnected");
    Path p;
    for (int v = sink; v != source; v = g.edges()[pred[v]].tail) p.push_back(pred[v]);
    std::reverse(p.begin(), p.end());
    return p;
}

Vector tolled_costs(const RoutingGame& g, const Vector& f, const Vector& tolls) {
    return g.edge_latencies(f) + tolls;
}

// Exact line search for moving theta of flow from path `from` to path `to`.
double shift_amount(const RoutingGame& g, const Vector& f, const Vector& tolls, const Path& from, const Path& to,
                    double available) {
    std::vector<int> plus, minus;
    for (int e : to)
        if (std::find(from.begin(), from.end(), e) == from.end()) plus.push_back(e);
    for (int e : from)
        if (std::find(to.begin(), to.end(), e) == to.end()) minus.push_back(e);
    auto deriv = [&](double th) {
        double s = 0;
        for (int e : plus) s += g.edges()[e].latency.value(f[e] + th) + tolls[e];
        for (int e : minus) s -= g.edges()[e].latency.value(std::max(f[e] - th, 0.0)) + tolls[e];
        return s;
    };
    if (deriv(0.0) >= 0) return 0.0;
    if (deriv(available) <= 0) return available;
    double lo = 0, hi = available;
    for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
        const double mid = 0.5 * (lo + hi);
        (deriv(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

FlowCertificate certificate(const RoutingGame& g, const Flow& fl, const Vector& tolls, double used_threshold) {
    const Vector costs = tolled_costs(g, fl.edge, tolls);
    FlowCertificate c{0.0, 0.0};
    for (size_t i = 0; i < g.commodities().size(); ++i) {
        const auto& com = g.commodities()[i];
        const double best = path_cost(shortest_path(g, com.source, com.sink, costs), costs);
        for (const auto& pf : fl.paths[i]) {
            const double excess = std::max(path_cost(pf.path, costs) - best, 0.0);
            c.fw_gap += pf.flow * excess;
            if (pf.flow > used_threshold) c.path_gap = std::max(c.path_gap, excess);
        }
    }
    return c;
}

EquilibriumResult wardrop_equilibrium(const RoutingGame& g, const Vector& tolls, const EquilibriumOptions& opts) {
    if (tolls.size() != g.num_edges()) throw UsageError("wardrop_equilibrium: toll vector has wrong length");
    if ((tolls.array() < 0).any()) throw UsageError("wardrop_equilibrium: tolls must be nonnegative");
    if (!(opts.tol > 0)) throw UsageError("wardrop_equilibrium: tol must be positive");
    const double sigma = g.min_slope();
    // below ~1e-14 the gap is dominated by rounding in the path costs
    const double gap_target = std::max(0.5 * sigma * opts.tol * opts.tol, 1e-14);

    EquilibriumResult res;
    Flow& fl = res.flow;
    const size_t K = g.commodities().size();
    if (opts.warm_start && opts.warm_start->paths.size() == K) {
        fl.paths = opts.warm_start->paths;
    } else {
        fl.paths.assign(K, {});
        Vector w = g.edge_latencies(Vector::Zero(g.num_edges())) + tolls;
        std::mt19937_64 rng(opts.start_seed);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (size_t i = 0; i < K; ++i) {
            Vector wi = w;
            if (opts.start_seed != 0)
                for (int e = 0; e < wi.size(); ++e) wi[e] = U(rng);
            const auto& c = g.commodities()[i];
            fl.paths[i].push_back({shortest_path(g, c.source, c.sink, wi), c.demand});
        }
    }
    fl.edge = edge_flow_of_paths(g, fl.paths);

    for (long it = 0;; ++it) {
        res.cert = certificate(g, fl, tolls);
        if (opts.record_potential) res.potential_trace.push_back(potential(g, fl.edge, tolls));
        if (res.cert.fw_gap <= gap_target && res.cert.path_gap <= opts.tol) {
            res.iterations = it;
            return res;
        }
        if (it >= opts.max_iter)
            throw SolverError("equilibrium solver hit its iteration cap with gap " + std::to_string(res.cert.fw_gap),
                              res.cert.fw_gap);
        for (size_t i = 0; i < K; ++i) {
            const auto& c = g.commodities()[i];
            const Path s = shortest_path(g, c.source, c.sink, tolled_costs(g, fl.edge, tolls));
            auto& set = fl.paths[i];
            size_t si = 0;
            while (si < set.size() && set[si].path != s) ++si;
            if (si == set.size()) set.push_back({s, 0.0});
            for (size_t j = 0; j < set.size(); ++j) {
                if (j == si || set[j].flow <= 0) continue;
                const double th = shift_amount(g, fl.edge, tolls, set[j].path, s, set[j].flow);
                if (th <= 0) continue;
                for (int e : set[j].path) fl.edge[e] -= th;
                for (int e : s) fl.edge[e] += th;
                set[si].flow += th;
                set[j].flow = (th >= set[j].flow) ? 0.0 : set[j].flow - th;
            }
            set.erase(std::remove_if(set.begin(), set.end(), [](const PathFlow& p) { return p.flow <= 0; }),
                      set.end());
        }
        fl.edge = edge_flow_of_paths(g, fl.paths);
    }
}

Flow equilibrium_by_enumeration(const RoutingGame& g, const Vector& tolls) {
    if (g.commodities().size() != 1) throw UnsupportedError("support enumeration handles one commodity");
    for (const auto& e : g.edges())
        if (!e.latency.affine()) throw UnsupportedError("support enumeration needs affine latencies");
    if (tolls.size() != g.num_edges()) throw UsageError("toll vector has wrong length");
    const auto paths = g.paths(0, 16);
    const int P = int(paths.size());
    const double D = g.commodities()[0].demand;
    auto slope = [&](int e) { return g.edges()[e].latency.derivative(0.0); };
    auto free = [&](int e) { return g.edges()[e].latency.value(0.0) + tolls[e]; };

    // shared[p][q] = sum of slopes over edges common to paths p and q
    Matrix shared = Matrix::Zero(P, P);
    Vector base = Vector::Zero(P);
    for (int p = 0; p < P; ++p) {
        for (int e : paths[p]) base[p] += free(e);
        for (int q = 0; q < P; ++q)
            for (int e : paths[p])
                if (std::find(paths[q].begin(), paths[q].end(), e) != paths[q].end()) shared(p, q) += slope(e);
    }
    for (unsigned mask = 1; mask < (1u << P); ++mask) {
        std::vector<int> S;
        for (int p = 0; p < P; ++p)
            if (mask & (1u << p)) S.push_back(p);
        const int k = int(S.size());
        Matrix M = Matrix::Zero(k + 1, k + 1);
        Vector rhs = Vector::Zero(k + 1);
        for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) M(a, b) = shared(S[a], S[b]);
            M(a, k) = -1.0;
            rhs[a] = -base[S[a]];
            M(k, a) = 1.0;
        }
        rhs[k] = D;
        Eigen::FullPivLU<Matrix> lu(M);
        if (lu.rank() < k + 1) continue;
        const Vector sol = lu.solve(rhs);
        if ((sol.head(k).array() < -1e-12).any()) continue;
        Vector h = Vector::Zero(P);
        for (int a = 0; a < k; ++a) h[S[a]] = std::max(sol[a], 0.0);
        const Vector cost = shared * h + base;
        bool ok = true;
        for (int p = 0; p < P && ok; ++p)
            if (!(mask & (1u << p)) && cost[p] < sol[k] - 1e-12) ok = false;
        if (!ok) continue;
        Flow fl;
        fl.paths.assign(1, {});
        for (int a = 0; a < k; ++a)
            if (h[S[a]] > 0) fl.paths[0].push_back({paths[S[a]], h[S[a]]});
        fl.edge = edge_flow_of_paths(g, fl.paths);
        return fl;
    }
    throw NumericalError("support enumeration found no equilibrium");
}

double braess_social_cost(double toll_left, double toll_right) {
    static const RoutingGame g = RoutingGame::braess();
    Vector tolls = Vector::Zero(g.num_edges());
    tolls[4] = toll_left;
    tolls[5] = toll_right;
    return social_cost(g, equilibrium_by_enumeration(g, tolls).edge);
}

EquilibriumOracle::EquilibriumOracle(RoutingGame g, double tol) : game_(std::move(g)), tol_(tol) {}

Vector EquilibriumOracle::respond(const Vector& tolls) {
    if (tolls.size() != game_.num_edges()) throw UsageError("equilibrium oracle: toll dimension mismatch");
    ++queries_;
    if (game_.min_slope() > 0) {
        EquilibriumOptions o;
        o.tol = tol_;
        if (have_last_) o.warm_start = &last_;
        last_ = wardrop_equilibrium(game_, tolls, o).flow;
    } else {
        last_ = equilibrium_by_enumeration(game_, tolls);
    }
    have_last_ = true;
    return last_.edge;
}

}  // namespace stackel
