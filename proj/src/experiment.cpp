#include "stackel/experiment.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "stackel/errors.hpp"
#include "stackel/induce.hpp"
#include "stackel/schedules.hpp"
#include "stackel/tolling.hpp"

namespace stackel::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Pricing: return "pricing";
        case Scenario::PricingEllipsoid: return "pricing_ellipsoid";
        case Scenario::StackelbergGeneral: return "stackelberg_general";
        case Scenario::RoutingTargetFlow: return "routing_target_flow";
        case Scenario::RoutingOptimalTolls: return "routing_optimal_tolls";
        case Scenario::PrincipalAgent: return "principal_agent";
        case Scenario::BraessScan: return "braess_scan";
    }
    return "?";
}

namespace {

// ---- config text ----

struct Entry {
    std::string value;
    int line;
};

struct Section {
    int line = 0;
    std::map<std::string, std::vector<Entry>> keys;
};

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"", {"scenario", "seeds", "output", "non_certified_ok"}},
        {"valuation", {"kind", "alpha", "rho", "beta", "a", "q", "bound", "floor"}},
        {"follower", {"mode", "zeta", "nu", "tol", "lo", "hi"}},
        {"cost", {"kind", "c", "q"}},
        {"target", {"x"}},
        {"leader", {"values"}},
        {"graph", {"builtin", "file", "edge", "commodity"}},
        {"braess", {"point"}},
        {"algorithm",
         {"alpha", "epsilon", "min_epsilon", "iterations", "step", "check_every", "t_constant", "inducer",
          "zoo_method", "zoo_budget", "zoo_grid_points", "zoo_resolution", "failure_prob", "samples",
          "lambda_leader", "solver_tol"}},
    };
    return s;
}

const std::set<std::string> repeatable{"edge", "commodity", "point"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

class Reader {
public:
    Reader(const std::string& text, std::string origin) : origin_(std::move(origin)) {
        std::istringstream in(text);
        std::string raw, current;
        sections_[""].line = 0;
        int n = 0;
        while (std::getline(in, raw)) {
            ++n;
            const std::string line = trim(raw.substr(0, raw.find('#')));
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') fail(n, "unterminated section header");
                current = trim(line.substr(1, line.size() - 2));
                if (!schema().count(current) || current.empty()) fail(n, "unknown section [" + current + "]");
                if (sections_.count(current)) fail(n, "section [" + current + "] appears twice");
                sections_[current].line = n;
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) fail(n, "expected key = value");
            const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
            if (key.empty()) fail(n, "missing key");
            if (!schema().at(current).count(key))
                fail(n, "unknown key '" + key + "'" + (current.empty() ? "" : " in [" + current + "]"));
            auto& slot = sections_[current].keys[key];
            if (!slot.empty() && !repeatable.count(key)) fail(n, "duplicate key '" + key + "'");
            slot.push_back({value, n});
        }
    }

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + msg);
    }

    bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
    int section_line(const std::string& s) const { return has_section(s) ? sections_.at(s).line : 0; }

    const Entry* find(const std::string& sec, const std::string& key) const {
        auto s = sections_.find(sec);
        if (s == sections_.end()) return nullptr;
        auto k = s->second.keys.find(key);
        return k == s->second.keys.end() ? nullptr : &k->second.front();
    }
    std::vector<Entry> all(const std::string& sec, const std::string& key) const {
        auto s = sections_.find(sec);
        if (s == sections_.end()) return {};
        auto k = s->second.keys.find(key);
        return k == s->second.keys.end() ? std::vector<Entry>{} : k->second;
    }

    std::optional<std::string> str(const std::string& sec, const std::string& key) const {
        const Entry* e = find(sec, key);
        return e ? std::optional<std::string>(e->value) : std::nullopt;
    }
    double number(const Entry& e, const std::string& what) const {
        double v = 0;
        const char* b = e.value.data();
        const char* end = b + e.value.size();
        auto [p, ec] = std::from_chars(b, end, v);
        if (ec != std::errc() || p != end || !std::isfinite(v)) fail(e.line, what + " is not a number: '" + e.value + "'");
        return v;
    }
    std::optional<double> num(const std::string& sec, const std::string& key) const {
        const Entry* e = find(sec, key);
        return e ? std::optional<double>(number(*e, key)) : std::nullopt;
    }
    std::optional<double> positive(const std::string& sec, const std::string& key) const {
        auto v = num(sec, key);
        if (v && !(*v > 0)) fail(find(sec, key)->line, key + " must be positive");
        return v;
    }
    std::optional<long> integer(const std::string& sec, const std::string& key, long min = 1) const {
        const Entry* e = find(sec, key);
        if (!e) return std::nullopt;
        long v = 0;
        auto [p, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
        if (ec != std::errc() || p != e->value.data() + e->value.size())
            fail(e->line, key + " is not an integer: '" + e->value + "'");
        if (v < min) fail(e->line, key + " must be at least " + std::to_string(min));
        return v;
    }
    std::optional<bool> boolean(const std::string& sec, const std::string& key) const {
        const Entry* e = find(sec, key);
        if (!e) return std::nullopt;
        if (e->value == "true") return true;
        if (e->value == "false") return false;
        fail(e->line, key + " must be true or false");
    }
    std::vector<double> list(const Entry& e, const std::string& what) const {
        std::string s = e.value;
        for (char& c : s)
            if (c == ',') c = ' ';
        std::istringstream in(s);
        std::vector<double> out;
        std::string tok;
        while (in >> tok) out.push_back(number({tok, e.line}, what));
        if (out.empty()) fail(e.line, what + " is empty");
        return out;
    }
    std::optional<Vector> vec(const std::string& sec, const std::string& key) const {
        const Entry* e = find(sec, key);
        if (!e) return std::nullopt;
        auto l = list(*e, key);
        return Eigen::Map<const Vector>(l.data(), Eigen::Index(l.size()));
    }

private:
    std::string origin_;
    std::map<std::string, Section> sections_;
};

std::optional<Scenario> scenario_from(const std::string& s) {
    for (auto sc : {Scenario::Pricing, Scenario::PricingEllipsoid, Scenario::StackelbergGeneral,
                    Scenario::RoutingTargetFlow, Scenario::RoutingOptimalTolls, Scenario::PrincipalAgent,
                    Scenario::BraessScan})
        if (s == scenario_name(sc)) return sc;
    return std::nullopt;
}

bool is_routing(Scenario s) {
    return s == Scenario::RoutingTargetFlow || s == Scenario::RoutingOptimalTolls || s == Scenario::BraessScan;
}

Valuation read_valuation(const Reader& r) {
    const auto kind = r.str("valuation", "kind");
    const int at = r.section_line("valuation");
    if (!kind) r.fail(at, "[valuation] needs kind = ces | cobb_douglas | quadratic");
    const double bound = r.positive("valuation", "bound").value_or(1.0);
    const double floor = r.num("valuation", "floor").value_or(-1.0);
    auto need_vec = [&](const char* key) {
        auto v = r.vec("valuation", key);
        if (!v) r.fail(at, std::string("[valuation] missing ") + key);
        return *v;
    };
    auto need_num = [&](const char* key) {
        auto v = r.num("valuation", key);
        if (!v) r.fail(at, std::string("[valuation] missing ") + key);
        return *v;
    };
    const int kline = r.find("valuation", "kind")->line;
    try {
        if (*kind == "ces") return Valuation(CES{need_vec("alpha"), need_num("rho"), need_num("beta")}, bound, floor);
        if (*kind == "cobb_douglas") return Valuation(CobbDouglas{need_vec("alpha")}, bound, floor);
        if (*kind == "quadratic") return Valuation(QuadraticValuation{need_vec("a"), need_num("q")}, bound, floor);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        r.fail(kline, std::string("invalid valuation: ") + e.what());
    }
    r.fail(kline, "unknown valuation kind '" + *kind + "'");
}

CostFunction read_cost(const Reader& r) {
    const auto kind = r.str("cost", "kind").value_or("linear");
    const int at = r.section_line("cost");
    auto c = r.vec("cost", "c");
    if (!c) r.fail(at, "[cost] missing c");
    try {
        if (kind == "linear") return CostFunction(LinearCost{*c});
        if (kind == "quadratic") {
            auto q = r.num("cost", "q");
            if (!q) r.fail(at, "[cost] quadratic needs q");
            return CostFunction(QuadraticCost{*c, *q});
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        r.fail(at, std::string("invalid cost: ") + e.what());
    }
    r.fail(r.find("cost", "kind")->line, "unknown cost kind '" + kind + "'");
}

RoutingGame read_game(const Reader& r, const fs::path& base) {
    const int at = r.section_line("graph");
    const auto builtin = r.str("graph", "builtin");
    const auto file = r.str("graph", "file");
    const auto edges = r.all("graph", "edge");
    const auto comms = r.all("graph", "commodity");
    const int sources = int(builtin.has_value()) + int(file.has_value()) + int(!edges.empty() || !comms.empty());
    if (sources != 1) r.fail(at, "[graph] needs exactly one of builtin, file, or edge/commodity lines");
    if (builtin) {
        if (*builtin == "two_link") return RoutingGame::two_link();
        if (*builtin == "braess") return RoutingGame::braess();
        r.fail(r.find("graph", "builtin")->line, "unknown builtin graph '" + *builtin + "'");
    }
    std::string text;
    int first_line = at;
    if (file) {
        const fs::path p = fs::path(*file).is_absolute() ? fs::path(*file) : base / *file;
        std::ifstream in(p);
        if (!in) r.fail(r.find("graph", "file")->line, "cannot read graph file " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
        first_line = r.find("graph", "file")->line;
    } else {
        for (const auto& e : edges) text += e.value + "\n";
        for (const auto& c : comms) text += "commodity " + c.value + "\n";
    }
    try {
        return RoutingGame::parse(text);
    } catch (const Error& e) {
        // inline lines are renumbered by parse; report against the section
        r.fail(first_line, std::string("graph: ") + e.what());
    }
}

void read_algorithm(const Reader& r, AlgorithmSpec& a) {
    const std::string s = "algorithm";
    if (auto v = r.positive(s, "alpha")) a.alpha = *v;
    a.epsilon = r.positive(s, "epsilon");
    a.min_epsilon = r.positive(s, "min_epsilon");
    a.iterations = r.integer(s, "iterations");
    a.step = r.positive(s, "step");
    if (auto v = r.integer(s, "check_every")) a.check_every = *v;
    if (auto v = r.positive(s, "t_constant")) a.t_constant = *v;
    if (auto v = r.str(s, "inducer")) {
        if (*v == "subgradient") a.inducer = Inducer::Subgradient;
        else if (*v == "ellipsoid") a.inducer = Inducer::Ellipsoid;
        else r.fail(r.find(s, "inducer")->line, "inducer must be subgradient or ellipsoid");
    }
    if (auto v = r.str(s, "zoo_method")) {
        if (*v == "grid") a.zoo_method = ZooMethod::GridRefine;
        else if (*v == "smoothed") a.zoo_method = ZooMethod::SmoothedGradient;
        else r.fail(r.find(s, "zoo_method")->line, "zoo_method must be grid or smoothed");
    }
    a.zoo_budget = r.integer(s, "zoo_budget");
    if (auto v = r.integer(s, "zoo_grid_points", 3)) a.zoo_grid_points = int(*v);
    if (auto v = r.positive(s, "zoo_resolution")) a.zoo_resolution = *v;
    if (auto v = r.positive(s, "failure_prob")) {
        if (*v >= 1) r.fail(r.find(s, "failure_prob")->line, "failure_prob must be below 1");
        a.failure_prob = *v;
    }
    a.samples = r.integer(s, "samples");
    a.lambda_leader = r.positive(s, "lambda_leader");
    if (auto v = r.positive(s, "solver_tol")) a.solver_tol = *v;
}

FeasibleSet follower_set(const ExperimentConfig& c) {
    return FeasibleSet::box(c.set_lo ? *c.set_lo : c.valuation->region_lo(),
                            c.set_hi ? *c.set_hi : c.valuation->region_hi());
}

FollowerMode follower_mode(const ExperimentConfig& c, std::uint64_t seed) {
    if (c.follower.mode == "approximate") return ApproximateMode{c.follower.zeta, seed, c.follower.tol};
    if (c.follower.mode == "noisy") return NoisyMode{c.follower.nu, seed, c.follower.tol};
    return ExactMode{c.follower.tol};
}

Incentive incentive_of(const ExperimentConfig& c) {
    return c.values ? Incentive::Reward : Incentive::Charge;
}

// Mirrors the leader's accuracy floor so an uncertified run fails before any output exists.
void check_certification(ExperimentConfig& c, const Reader& r) {
    if (!c.algorithm.min_epsilon) return;
    double eps = 0;
    const auto& a = c.algorithm;
    switch (c.scenario) {
        case Scenario::Pricing:
        case Scenario::PricingEllipsoid: {
            if (c.target) return;
            const Valuation& v = *c.valuation;
            eps = profit_schedule(a.alpha, v.holder_constant(), c.cost->lipschitz(v.bound()), v.dim(),
                                  follower_set(c).diameter(), v.holder_exponent())
                      .epsilon;
            break;
        }
        case Scenario::PrincipalAgent: {
            if (c.target) return;
            eps = noisy_profit_schedule(a.alpha, follower_set(c).diameter(), c.valuation->dim(), a.failure_prob, 1.0)
                      .epsilon;
            break;
        }
        default: return;
    }
    if (eps < *a.min_epsilon) {
        try {
            r.fail(r.find("algorithm", "min_epsilon")->line,
                   "alpha = " + format_number(a.alpha) + " needs induction accuracy " + format_number(eps) +
                       " below min_epsilon; pass --non-certified-ok or set non_certified_ok = true");
        } catch (const ConfigError& e) {
            c.uncertified_reason = e.what();
        }
    }
}

}  // namespace

// ---- parsing ----

ExperimentConfig parse_config(const std::string& text, const std::string& origin, const fs::path& base_dir,
                              bool force_non_certified) {
    Reader r(text, origin);
    ExperimentConfig c;
    const auto sc = r.str("", "scenario");
    if (!sc) r.fail(1, "missing scenario");
    const auto s = scenario_from(*sc);
    if (!s) r.fail(r.find("", "scenario")->line, "unknown scenario '" + *sc + "'");
    c.scenario = *s;
    if (const Entry* e = r.find("", "seeds")) {
        c.seeds.clear();
        for (double v : r.list(*e, "seeds")) {
            if (v < 0 || v != std::floor(v) || v > 9.007e15) r.fail(e->line, "seeds must be nonnegative integers");
            c.seeds.push_back(static_cast<std::uint64_t>(v));
        }
    }
    c.output = r.str("", "output");
    c.non_certified_ok = r.boolean("", "non_certified_ok").value_or(false) || force_non_certified;
    read_algorithm(r, c.algorithm);

    if (r.has_section("follower")) {
        c.follower.mode = r.str("follower", "mode").value_or("exact");
        if (c.follower.mode != "exact" && c.follower.mode != "approximate" && c.follower.mode != "noisy")
            r.fail(r.find("follower", "mode")->line, "mode must be exact, approximate or noisy");
        c.follower.zeta = r.num("follower", "zeta").value_or(0);
        c.follower.nu = r.num("follower", "nu").value_or(0);
        if (c.follower.zeta < 0 || c.follower.nu < 0) r.fail(r.section_line("follower"), "zeta and nu must be >= 0");
        if (auto t = r.positive("follower", "tol")) c.follower.tol = *t;
        c.set_lo = r.vec("follower", "lo");
        c.set_hi = r.vec("follower", "hi");
    }
    if (r.has_section("target")) {
        c.target = r.vec("target", "x");
        if (!c.target) r.fail(r.section_line("target"), "[target] needs x");
    }
    if (r.has_section("leader")) {
        c.values = r.vec("leader", "values");
        if (!c.values) r.fail(r.section_line("leader"), "[leader] needs values");
    }

    const int top = r.find("", "scenario")->line;
    if (is_routing(c.scenario)) {
        for (const char* sec : {"valuation", "follower", "cost", "leader"})
            if (r.has_section(sec)) r.fail(r.section_line(sec), std::string("[") + sec + "] does not apply to routing");
        if (c.scenario == Scenario::BraessScan) {
            if (r.has_section("graph")) r.fail(r.section_line("graph"), "braess_scan always uses the Braess network");
            c.game = RoutingGame::braess();
            for (const auto& e : r.all("braess", "point")) {
                auto l = r.list(e, "point");
                if (l.size() != 2 || l[0] < 0 || l[1] < 0) r.fail(e.line, "point needs two nonnegative tolls");
                c.braess_points.push_back({l[0], l[1]});
            }
            if (c.braess_points.empty()) c.braess_points = {{0, 0}, {1, 2}, {0.01, 0.02}};
        } else {
            if (!r.has_section("graph")) r.fail(top, "routing scenarios need a [graph] section");
            c.game = read_game(r, base_dir);
        }
        if (c.scenario == Scenario::RoutingTargetFlow) {
            if (!c.target) r.fail(top, "routing_target_flow needs [target] x = <edge flows>");
            if (c.target->size() != c.game->num_edges())
                r.fail(r.find("target", "x")->line, "target has " + std::to_string(c.target->size()) +
                                                        " entries, the graph has " +
                                                        std::to_string(c.game->num_edges()) + " edges");
            try {
                check_feasible_flow(*c.game, *c.target);
            } catch (const Error& e) {
                r.fail(r.find("target", "x")->line, e.what());
            }
        }
    } else {
        if (r.has_section("graph") || r.has_section("braess"))
            r.fail(r.section_line(r.has_section("graph") ? "graph" : "braess"), "graph sections need a routing scenario");
        if (!r.has_section("valuation")) r.fail(top, "scenario needs a [valuation] section");
        c.valuation = read_valuation(r);
        const int d = c.valuation->dim();
        if (r.has_section("cost")) {
            c.cost = read_cost(r);
            if (c.cost->dim() != d) r.fail(r.section_line("cost"), "cost dimension differs from the valuation's");
        }
        if (c.set_lo && c.set_lo->size() != d) r.fail(r.find("follower", "lo")->line, "lo has wrong dimension");
        if (c.set_hi && c.set_hi->size() != d) r.fail(r.find("follower", "hi")->line, "hi has wrong dimension");
        if (c.target && c.target->size() != d) r.fail(r.find("target", "x")->line, "target has wrong dimension");
        if (c.values && c.values->size() != d) r.fail(r.find("leader", "values")->line, "values have wrong dimension");
        const FeasibleSet set = follower_set(c);
        if (c.target && !contains(set, *c.target, 1e-9))
            r.fail(r.find("target", "x")->line, "target lies outside the follower's action set");

        switch (c.scenario) {
            case Scenario::Pricing:
            case Scenario::PricingEllipsoid:
                if (!c.target && !c.cost) r.fail(top, "profit maximization needs a [cost] section");
                if (c.values) r.fail(r.section_line("leader"), "pricing takes a [cost], not [leader] values");
                if (c.follower.mode == "noisy") r.fail(r.section_line("follower"), "pricing needs a noiseless buyer");
                break;
            case Scenario::StackelbergGeneral:
                if (bool(c.cost) == bool(c.values))
                    r.fail(top, "stackelberg_general needs either [cost] (profit) or [leader] values (procurement)");
                break;
            case Scenario::PrincipalAgent:
                if (!c.target && !c.values) r.fail(top, "principal_agent needs [leader] values");
                if (c.follower.mode != "noisy") {
                    if (r.has_section("follower"))
                        r.fail(r.section_line("follower"), "principal_agent needs mode = noisy");
                    c.follower.mode = "noisy";
                }
                if (!c.values) c.values = Vector::Ones(d);   // target-only runs still pay the agent
                break;
            default: break;
        }
        check_certification(c, r);
    }
    if (r.has_section("braess") && c.scenario != Scenario::BraessScan)
        r.fail(r.section_line("braess"), "[braess] applies to braess_scan only");
    return c;
}

ExperimentConfig load_config(const fs::path& path, bool force_non_certified) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string(), path.parent_path().empty() ? fs::path(".") : path.parent_path(),
                        force_non_certified);
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 12);
    (void)ec;
    return std::string(buf, p);
}

namespace {

// ---- cells ----

struct Row {
    long iteration;
    double norm, distance, objective;
    long cumulative;
    double wall_ms;
};

class CellWriter {
public:
    CellWriter(const ExperimentConfig& c, std::uint64_t seed) : prefix_(std::string(scenario_name(c.scenario)) + "," + std::to_string(seed) + ",") {
        out_ << csv_header() << "\n";
    }
    void row(const Row& r) {
        out_ << prefix_ << r.iteration << "," << format_number(r.norm) << "," << format_number(r.distance) << ","
             << format_number(r.objective) << "," << r.cumulative << "," << format_number(r.wall_ms) << "\n";
    }
    void failed(double wall_ms) { out_ << prefix_ << "failed,,,,," << format_number(wall_ms) << "\n"; }
    std::string str() const { return out_.str(); }

private:
    std::string prefix_;
    std::ostringstream out_;
};

json vec_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

InduceConfig controls(const AlgorithmSpec& a) {
    InduceConfig c;
    c.override_T = a.iterations ? a.iterations : InduceConfig{}.override_T;
    c.override_eta = a.step;
    c.check_every = a.check_every;
    c.t_constant = a.t_constant;
    c.throw_on_budget = false;
    return c;
}

ZooConfig zoo_config(const AlgorithmSpec& a, std::uint64_t seed) {
    ZooConfig z;
    z.method = a.zoo_method;
    z.budget = a.zoo_budget;
    z.seed = seed;
    z.grid_points = a.zoo_grid_points;
    z.resolution = a.zoo_resolution;
    return z;
}

void leader_rows(CellWriter& w, const LeaderResult& r) {
    for (const auto& t : r.trace)
        w.row({t.query, t.action.norm(), t.distance, t.objective, t.cumulative_queries, t.wall_ms});
}

json leader_summary(const LeaderResult& r) {
    return {{"objective", r.objective},
            {"leader_action", vec_json(r.action)},
            {"induced", vec_json(r.induced)},
            {"target", vec_json(r.target)},
            {"follower_queries", r.total_follower_queries},
            {"zoo_queries", r.zoo_queries},
            {"certified", r.certified},
            {"epsilon", r.epsilon}};
}

// Induction-only runs: one row per follower query.
json induce_rows(CellWriter& w, const InduceResult& r, const std::function<double(const Vector&, const Vector&)>& objective) {
    long i = 0;
    for (const auto& t : r.trace) {
        ++i;
        w.row({i, t.action.norm(), t.distance, objective ? objective(t.action, t.response) : std::nan(""), i, t.wall_ms});
    }
    return {{"leader_action", vec_json(r.leader_action)},
            {"induced", vec_json(r.induced)},
            {"distance", r.distance},
            {"converged", r.converged},
            {"follower_queries", r.queries},
            {"certified", r.converged},
            {"objective", objective ? objective(r.leader_action, r.induced) : std::nan("")}};
}

json run_pricing(const ExperimentConfig& c, std::uint64_t seed, CellWriter& w) {
    FollowerOracle f(*c.valuation, follower_set(c), follower_mode(c, seed), Incentive::Charge);
    const auto& a = c.algorithm;
    const bool ellipsoid = c.scenario == Scenario::PricingEllipsoid || a.inducer == Inducer::Ellipsoid;
    if (c.target) {
        const double eps = a.epsilon.value_or(1e-2);
        InduceResult r;
        if (ellipsoid) {
            EllipsoidConfig ec;
            const InduceConfig ic = induce_config_for(f, eps);
            ec.epsilon = eps;
            ec.lambda_F = ic.lambda_F;
            ec.gamma = ic.gamma;
            ec.sigma = ic.sigma;
            ec.holder_beta = ic.holder_beta;
            ec.override_T = a.iterations;
            r = learn_price_ellipsoid(f, *c.target, ec);
        } else {
            InduceConfig ic = controls(a);
            const InduceConfig inst = induce_config_for(f, eps);
            ic.epsilon = eps;
            ic.lambda_F = inst.lambda_F;
            ic.gamma = inst.gamma;
            ic.sigma = inst.sigma;
            ic.holder_beta = inst.holder_beta;
            ic.zeta = inst.zeta;
            r = learn_price(f, f.set(), *c.target, ic);
        }
        std::function<double(const Vector&, const Vector&)> obj;
        if (c.cost) obj = [&](const Vector& p, const Vector& x) { return leader_payoff(ProfitObjective{*c.cost}, p, x); };
        return induce_rows(w, r, obj);
    }
    OproConfig oc;
    oc.alpha = a.alpha;
    oc.min_epsilon = a.min_epsilon;
    oc.allow_uncertified = c.non_certified_ok;
    oc.inducer = ellipsoid ? Inducer::Ellipsoid : Inducer::Subgradient;
    oc.zoo = zoo_config(a, seed);
    oc.induce = controls(a);
    const LeaderResult r = opro(f, *c.cost, oc);
    leader_rows(w, r);
    return leader_summary(r);
}

json run_general(const ExperimentConfig& c, std::uint64_t seed, CellWriter& w) {
    const Incentive inc = incentive_of(c);
    FollowerOracle f(*c.valuation, follower_set(c), follower_mode(c, seed), inc);
    const auto& a = c.algorithm;
    const Valuation& v = *c.valuation;
    const LeaderObjective obj = c.cost ? LeaderObjective(ProfitObjective{*c.cost}) : ProcurementObjective{*c.values};
    const double lambda =
        a.lambda_leader.value_or(c.cost ? v.holder_constant() + c.cost->lipschitz(v.bound())
                                        : c.values->norm() + v.holder_constant());
    bool uncapped = true;
    double eps = general_schedule(a.alpha, lambda, v.dim()).epsilon;
    if (a.min_epsilon && eps < *a.min_epsilon) {
        eps = *a.min_epsilon;
        uncapped = false;
    }
    // keep induced bundles interior so the inducing action is unique
    const double delta = std::min(4.0 * eps, 0.25);
    StackelbergInstance inst{&f, round_set(shrink(f.set(), delta)), {}, obj, lambda};
    LearnOptConfig lc;
    lc.alpha = a.alpha;
    lc.min_epsilon = a.min_epsilon;
    lc.allow_uncertified = c.non_certified_ok;
    lc.zoo = zoo_config(a, seed);
    InduceConfig ic = controls(a);
    const InduceConfig inst_c = induce_config_for(f, eps);
    ic.lambda_F = inst_c.lambda_F;
    ic.gamma = inst_c.gamma;
    ic.sigma = inst_c.sigma;
    ic.holder_beta = inst_c.holder_beta;
    ic.zeta = inst_c.zeta;
    lc.induce = ic;
    LeaderResult r = learn_opt(inst, lc);
    r.certified = r.certified && uncapped;
    leader_rows(w, r);
    return leader_summary(r);
}

json run_principal_agent(const ExperimentConfig& c, std::uint64_t seed, CellWriter& w) {
    FollowerOracle agent(*c.valuation, follower_set(c), follower_mode(c, seed), Incentive::Reward);
    const auto& a = c.algorithm;
    if (c.target) {
        InduceConfig ic = controls(a);
        const InduceConfig inst = induce_config_for(agent, a.epsilon.value_or(0.05));
        ic.epsilon = inst.epsilon;
        ic.sigma = inst.sigma;
        ic.gamma = inst.gamma;
        ic.lambda_F = inst.lambda_F;
        ic.holder_beta = inst.holder_beta;
        const InduceResult r = learn_price_noisy(agent, *c.target, ic);
        const Vector values = *c.values;
        return induce_rows(w, r, [&](const Vector& p, const Vector& x) {
            return leader_payoff(ProcurementObjective{values}, p, x);
        });
    }
    OproNoisyConfig oc;
    oc.alpha = a.alpha;
    oc.failure_prob = a.failure_prob;
    oc.min_epsilon = a.min_epsilon;
    oc.allow_uncertified = c.non_certified_ok;
    oc.samples = a.samples;
    oc.zoo = zoo_config(a, seed);
    oc.induce = controls(a);
    const LeaderResult r = opro_noisy(agent, *c.values, oc);
    leader_rows(w, r);
    json s = leader_summary(r);
    // the realized objective above is a sample mean; this is its noiseless counterpart
    s["expected_objective"] = leader_payoff(ProcurementObjective{*c.values}, r.action, agent.exact_response(r.action));
    return s;
}

json run_target_flow(const ExperimentConfig& c, CellWriter& w) {
    EquilibriumOracle eq(*c.game, c.algorithm.solver_tol);
    const double delta = c.algorithm.epsilon.value_or(1e-2);
    InduceResult r;
    if (c.algorithm.inducer == Inducer::Ellipsoid) {
        EllipsoidConfig ec;
        ec.epsilon = delta;
        ec.sigma = c.game->min_slope();
        ec.override_T = c.algorithm.iterations;
        r = learn_toll_ellipsoid(eq, *c.target, ec);
    } else {
        r = enforce_target_flow(eq, *c.target, delta, controls(c.algorithm));
    }
    const RoutingGame& g = *c.game;
    json s = induce_rows(w, r, [&](const Vector&, const Vector& f) { return social_cost(g, f); });
    s["potential_at_target"] = potential(g, *c.target, Vector::Zero(g.num_edges()));
    s["dual_value"] = toll_dual_value(g, r.leader_action, *c.target);
    return s;
}

json run_optimal_tolls(const ExperimentConfig& c, std::uint64_t seed, CellWriter& w) {
    EquilibriumOracle eq(*c.game, c.algorithm.solver_tol);
    TollOptConfig tc;
    tc.alpha = c.algorithm.alpha;
    tc.min_epsilon = c.algorithm.min_epsilon;
    tc.allow_uncertified = c.non_certified_ok;
    tc.zoo = zoo_config(c.algorithm, seed);
    tc.induce = controls(c.algorithm);
    const LeaderResult r = optimize_tolls(eq, tc);
    leader_rows(w, r);
    json s = leader_summary(r);
    s["social_cost"] = social_cost(*c.game, r.induced);
    return s;
}

std::string point_key(double a, double b) { return "SC(" + format_number(a) + "," + format_number(b) + ")"; }

json run_braess(const ExperimentConfig& c, CellWriter& w) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& pts = c.braess_points;
    std::vector<double> sc;
    json values = json::object();
    for (size_t i = 0; i < pts.size(); ++i) {
        sc.push_back(braess_social_cost(pts[i].first, pts[i].second));
        values[point_key(pts[i].first, pts[i].second)] = sc.back();
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        w.row({long(i + 1), std::hypot(pts[i].first, pts[i].second), std::nan(""), sc.back(), long(i + 1), ms});
    }
    // a point on the segment between two others whose cost lies above the chord
    json witness = nullptr;
    for (size_t k = 0; k < pts.size() && witness.is_null(); ++k)
        for (size_t i = 0; i < pts.size() && witness.is_null(); ++i)
            for (size_t j = 0; j < pts.size() && witness.is_null(); ++j) {
                if (i == j || k == i || k == j) continue;
                const double dx = pts[j].first - pts[i].first, dy = pts[j].second - pts[i].second;
                const double len2 = dx * dx + dy * dy;
                if (len2 == 0) continue;
                const double lam = ((pts[k].first - pts[i].first) * dx + (pts[k].second - pts[i].second) * dy) / len2;
                const double ex = pts[i].first + lam * dx - pts[k].first, ey = pts[i].second + lam * dy - pts[k].second;
                if (lam <= 0 || lam >= 1 || std::hypot(ex, ey) > 1e-12) continue;
                const double chord = (1 - lam) * sc[i] + lam * sc[j];
                if (sc[k] > chord + 1e-12) witness = {{"point", k}, {"ends", {i, j}}, {"weight", lam}, {"chord", chord}};
            }
    json s = values;
    s["values"] = values;
    s["nonconvex_witness"] = !witness.is_null();
    if (!witness.is_null()) s["witness"] = witness;
    return s;
}

}  // namespace

CellResult run_cell(const ExperimentConfig& c, std::uint64_t seed) {
    CellResult res;
    res.seed = seed;
    CellWriter w(c, seed);
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count(); };
    try {
        switch (c.scenario) {
            case Scenario::Pricing:
            case Scenario::PricingEllipsoid: res.summary = run_pricing(c, seed, w); break;
            case Scenario::StackelbergGeneral: res.summary = run_general(c, seed, w); break;
            case Scenario::PrincipalAgent: res.summary = run_principal_agent(c, seed, w); break;
            case Scenario::RoutingTargetFlow: res.summary = run_target_flow(c, w); break;
            case Scenario::RoutingOptimalTolls: res.summary = run_optimal_tolls(c, seed, w); break;
            case Scenario::BraessScan: res.summary = run_braess(c, w); break;
        }
    } catch (const ConfigError& e) {
        res.status = "config_error";
        res.error = e.what();
    } catch (const std::exception& e) {
        res.status = "failed";
        res.error = e.what();
    }
    res.wall_ms = elapsed();
    if (res.status != "ok") w.failed(res.wall_ms);
    res.csv = w.str();
    return res;
}

void write_atomically(const fs::path& path, const std::string& contents) {
    const fs::path tmp = path.string() + ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

int run(const ExperimentConfig& c, const RunOptions& opts, std::ostream& log) {
    if (c.uncertified_reason && !c.non_certified_ok) throw ConfigError(*c.uncertified_reason);
    fs::create_directories(opts.out_dir);
    const std::string name = scenario_name(c.scenario);
    std::vector<CellResult> results(c.seeds.size());
    std::atomic<size_t> next{0};
    std::mutex log_mu;
    auto worker = [&] {
        for (size_t i; (i = next.fetch_add(1)) < c.seeds.size();) {
            results[i] = run_cell(c, c.seeds[i]);
            const auto& r = results[i];
            write_atomically(opts.out_dir / (name + "_seed" + std::to_string(r.seed) + ".csv"), r.csv);
            std::lock_guard lock(log_mu);
            log << name << " seed " << r.seed << ": " << r.status;
            if (r.status == "ok" && r.summary.contains("objective"))
                log << ", objective " << format_number(r.summary["objective"].get<double>());
            if (!r.error.empty()) log << " (" << r.error << ")";
            log << ", " << format_number(r.wall_ms / 1000.0) << " s\n";
        }
    };
    const int jobs = std::max(1, std::min<int>(opts.jobs, int(c.seeds.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    json summary{{"schema_version", 1}, {"scenario", name}, {"non_certified_ok", c.non_certified_ok}};
    json cells = json::array();
    int code = 0;
    double total = 0;
    int counted = 0;
    bool all_certified = true;
    for (const auto& r : results) {
        json cell{{"seed", r.seed}, {"status", r.status}, {"trace", name + "_seed" + std::to_string(r.seed) + ".csv"}};
        if (r.status == "ok") {
            cell["result"] = r.summary;
            if (r.summary.contains("objective") && r.summary["objective"].is_number()) {
                total += r.summary["objective"].get<double>();
                ++counted;
            }
            if (r.summary.contains("certified")) all_certified = all_certified && r.summary["certified"].get<bool>();
        } else {
            cell["error"] = r.error;
            code = std::max(code, r.status == "config_error" ? 2 : 1);
        }
        cells.push_back(cell);
    }
    summary["cells"] = cells;
    summary["certified"] = all_certified;
    if (counted) summary["mean_objective"] = total / counted;
    if (c.scenario == Scenario::BraessScan && !results.empty() && results.front().status == "ok") {
        for (auto& [k, v] : results.front().summary["values"].items()) summary[k] = v;
        summary["nonconvex_witness"] = results.front().summary["nonconvex_witness"];
    }
    write_atomically(opts.out_dir / "summary.json", summary.dump(2) + "\n");
    return code;
}

json verify(const ExperimentConfig& c, const Vector& action) {
    if (!action.allFinite()) throw UsageError("action has non-finite entries");
    if ((action.array() < 0).any()) throw UsageError("leader action must be nonnegative");
    json out{{"scenario", scenario_name(c.scenario)}, {"action", vec_json(action)}};
    if (c.game) {
        if (action.size() != c.game->num_edges())
            throw UsageError("expected " + std::to_string(c.game->num_edges()) + " tolls, got " +
                             std::to_string(action.size()));
        EquilibriumOracle eq(*c.game, c.algorithm.solver_tol);
        const Vector f = eq.respond(action);
        out["induced"] = vec_json(f);
        out["social_cost"] = social_cost(*c.game, f);
        out["objective"] = -social_cost(*c.game, f);
        if (c.target) out["distance_to_target"] = (f - *c.target).norm();
        return out;
    }
    if (action.size() != c.valuation->dim())
        throw UsageError("expected " + std::to_string(c.valuation->dim()) + " prices, got " + std::to_string(action.size()));
    FollowerOracle f(*c.valuation, follower_set(c), ExactMode{std::min(c.follower.tol, 1e-10)}, incentive_of(c));
    const Vector x = f.exact_response(action);
    out["induced"] = vec_json(x);
    if (c.cost) out["objective"] = leader_payoff(ProfitObjective{*c.cost}, action, x);
    else if (c.values) out["objective"] = leader_payoff(ProcurementObjective{*c.values}, action, x);
    if (c.target) out["distance_to_target"] = (x - *c.target).norm();
    return out;
}

}  // namespace stackel::experiment
