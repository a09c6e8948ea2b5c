#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lcm/env/env.hpp"
#include "lcm/simulate/simulate.hpp"
#include "lcm/solver/a2c.hpp"

namespace lcm::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kDiverged = 3 };

inline const std::vector<std::string> kCommands{"train", "simulate", "compare", "calibrate", "emtr-scan"};

struct RunConfig {
    std::string command;
    std::filesystem::path config_path;
    std::string config_text;  // verbatim

    std::filesystem::path params_dir;
    int year = 2023;
    std::optional<std::filesystem::path> ruleset, demographics, utility, wages;
    std::optional<std::filesystem::path> checkpoint;
    std::filesystem::path out;
    std::uint64_t seed = 1;
    int workers = 0;  // 0: all cores

    solver::TrainConfig train;

    // simulate / compare / calibrate
    int cohort_size = 1000;
    solver::ActMode mode = solver::ActMode::Sample;
    bool rates = true;
    std::optional<std::filesystem::path> population;
    int repeats = 1;
    std::int64_t refit_steps = 0;

    std::optional<std::filesystem::path> reform;

    std::optional<std::filesystem::path> targets;
    int budget = 10;
    std::vector<std::string> blocks;
    double kappa_step = 0.05;
    double friction_step = 0.10;

    Json household;  // emtr-scan template
    double wage_min = 0.0, wage_max = 8000.0, wage_step = 50.0, delta = 100.0;
    int who = 0;

    // Settings after path resolution and overrides; written to run.json.
    Json resolved() const;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::filesystem::path> out;
    std::optional<std::filesystem::path> checkpoint;
    std::optional<std::filesystem::path> reform;
};

// Parses and checks a config file; relative paths resolve against its directory.
// Throws ConfigError on unknown keys, bad values or missing referenced files.
RunConfig load_run_config(const std::string& command, const std::filesystem::path& config, const Overrides& o = {});

env::Model load_run_model(const RunConfig& c);

// The report cmd_simulate writes: one cohort, or the repeat mean when repeats >= 2,
// scaled to the population counts when given.
simulate::AggregateReport simulate_report(const RunConfig& c, const env::Model& m, const solver::PolicyNetwork& net,
                                          std::vector<simulate::CellStats>* repeat_stats = nullptr);

int cmd_train(const RunConfig& c);
int cmd_simulate(const RunConfig& c);
int cmd_compare(const RunConfig& c);
int cmd_calibrate(const RunConfig& c);
int cmd_emtr_scan(const RunConfig& c);

// Full entry point: argument parsing, dispatch and exit codes.
int run(int argc, const char* const* argv);

}  // namespace lcm::cli
