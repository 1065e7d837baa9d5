#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "stackel/errors.hpp"
#include "stackel/experiment.hpp"

namespace ex = stackel::experiment;

namespace {

constexpr const char* kOutEnv = "STACKEL_OUT_DIR";

stackel::Vector parse_action(const std::string& text) {
    std::string s = text;
    for (char& c : s)
        if (c == ',') c = ' ';
    std::istringstream in(s);
    std::vector<double> v;
    std::string tok;
    while (in >> tok) {
        std::size_t used = 0;
        double x = 0;
        try {
            x = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size()) throw stackel::UsageError("--action: not a number: '" + tok + "'");
        v.push_back(x);
    }
    if (v.empty()) throw stackel::UsageError("--action is empty");
    return Eigen::Map<stackel::Vector>(v.data(), Eigen::Index(v.size()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Leader-follower learning from revealed preferences: experiment runner"};
    app.require_subcommand(1);

    std::string config_path, out_dir, action;
    int jobs = 1;
    bool non_certified_ok = false;

    auto* run = app.add_subcommand("run", "Run every seed of a config; write traces and summary.json");
    run->add_option("config", config_path, "Experiment config file")->required();
    run->add_option("--out", out_dir, std::string("Output directory (default: config 'output', then $") + kOutEnv +
                                          ", then ./stackel_out)");
    run->add_option("--jobs,-j", jobs, "Worker threads")->check(CLI::PositiveNumber);
    run->add_flag("--non-certified-ok", non_certified_ok,
                  "Accept an induction accuracy floor above what the schedule certifies");

    auto* ver = app.add_subcommand("verify", "Replay the follower at a fixed leader action");
    ver->add_option("config", config_path, "Experiment config file")->required();
    ver->add_option("--action", action, "Comma-separated prices or tolls")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const ex::ExperimentConfig cfg = ex::load_config(config_path, non_certified_ok);

        if (ver->parsed()) {
            std::cout << ex::verify(cfg, parse_action(action)).dump(2) << "\n";
            return 0;
        }

        ex::RunOptions opts;
        opts.jobs = jobs;
        if (!out_dir.empty()) opts.out_dir = out_dir;
        else if (cfg.output) opts.out_dir = *cfg.output;
        else if (const char* env = std::getenv(kOutEnv); env && *env) opts.out_dir = env;
        else opts.out_dir = "stackel_out";
        return ex::run(cfg, opts, std::cerr);
    } catch (const stackel::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const stackel::UsageError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
