#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "yule/limits.hpp"
#include "yule/model.hpp"
#include "yule/rare.hpp"
#include "yule/xp.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::vector<std::string>& sets) {
    yule::xp::ExperimentConfig cfg;
    try {
        cfg = yule::xp::load_config(config_path);
        for (const auto& kv : sets) yule::xp::apply_override(cfg, kv);
    } catch (const yule::xp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    auto out = yule::xp::run_experiment(cfg);
    yule::xp::write_artifacts(out, cfg.output_dir);
    bool all_pass = true;
    for (const auto& row : out.rows) all_pass = all_pass && row.pass;
    for (const auto& c : out.criteria) {
        all_pass = all_pass && c.pass;
        std::cout << c.id << ": " << (c.pass ? "pass" : "FAIL") << "  measured="
                  << c.measured << " reference=" << c.reference << "\n";
    }
    std::cout << out.rows.size() << " checks, artifacts in " << cfg.output_dir << "\n";
    if (out.truncation_flag) {
        std::cerr << "warning: truncation reached; results marked suspect\n";
        return 3;
    }
    return all_pass ? 0 : 1;
}

int cmd_self_test() {
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        std::cout << name << ": " << (ok ? "pass" : "FAIL") << "\n";
        if (!ok) ++failures;
    };

    yule::Rng rng(yule::RngStream{424242, 0});
    auto splits = yule::model::sample_splits(10000, rng);
    auto pv = yule::model::bin_probabilities(splits, 1.0);
    double s = 0.0;
    for (double p : pv.probs) s += p;
    check("probability normalization", std::abs(s + pv.tail_mass - 1.0) < 1e-10);
    check("survival limit at x=0", yule::limits::nu_survival_limit(0.0, 1.0) == 1.0);
    check("gap bound arithmetic",
          std::abs(yule::rare::poissonization_gap_bound(1e6, 1e2, 1.0) -
                   2.0 * std::exp(2.0) * 1e-4) < 1e-15);

    // stderr should shrink like 1/sqrt(replications)
    auto e1 = yule::rare::conditional_occupancy_experiment(1e5, 2.0, 0.0,
                                                           std::numeric_limits<double>::infinity(),
                                                           1.0, 0.22, 400, 424242, 0);
    auto e2 = yule::rare::conditional_occupancy_experiment(1e5, 2.0, 0.0,
                                                           std::numeric_limits<double>::infinity(),
                                                           1.0, 0.22, 1600, 424242, 4096);
    const double shrink = e1.stderr_ / e2.stderr_;
    check("stderr scaling under replication quadrupling", shrink > 1.3 && shrink < 3.1);

    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification laboratory for a bins-and-balls "
                 "occupancy scheme in a branching random environment"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
    run->add_option("--config", config_path, "flat JSON config file")->required();
    run->add_option("--set", sets, "override: key=value (repeatable)");

    app.add_subcommand("list-experiments", "Print the experiment catalog");
    app.add_subcommand("self-test", "Quick internal consistency checks");

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand("run")) return cmd_run(config_path, sets);
    if (app.got_subcommand("list-experiments")) {
        std::cout << yule::xp::catalog();
        return 0;
    }
    return cmd_self_test();
}
