#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lcm/env/env.hpp"
#include "lcm/simulate/simulate.hpp"
#include "lcm/solver/a2c.hpp"

namespace lcm::calibrate {

enum class Statistic {
    EmploymentRate,
    UnemploymentRate,
    PartTimeShare,  // of the employed
    DisabilityRate,
    OutsideShare,
    WagesTotal,
    TaxesTotal,
    BenefitsTotal,
};
std::string_view to_string(Statistic s);
Statistic statistic_from_string(std::string_view s);
bool is_rate(Statistic s);

struct Target {
    Statistic stat = Statistic::EmploymentRate;
    int gender = -1;  // -1 both
    int age_lo = 18, age_hi = 64;
    double value = 0.0;
    double weight = 1.0;
    std::string label() const;
};

struct CalibrationTargets {
    std::vector<Target> targets;
    // Weights >= 0, rates in [0, 1], nonzero value where the weight is positive.
    void validate() const;
};

// CSV columns: statistic, gender (all|male|female), age_lo, age_hi, value, weight.
CalibrationTargets load_targets(const std::filesystem::path& csv);
void save_targets(const std::filesystem::path& csv, const CalibrationTargets& t);

double statistic_value(const simulate::AggregateReport& r, const Target& t);
// Sum of w * ((simulated - target) / target)^2.
double loss(const simulate::AggregateReport& r, const CalibrationTargets& t);

struct ModelParams {
    env::UtilityParams utility;
    wage::FrictionTable friction;
};

// A coordinate block: one kappa entry (additive steps) or one friction cell across the
// three groups (multiplicative steps, clamped to [0, 1]).
struct Block {
    enum class Kind { Kappa, Friction };
    std::string name;
    Kind kind = Kind::Kappa;
};
std::vector<Block> all_blocks();
Block block_by_name(std::string_view name);
double block_value(const ModelParams& p, const Block& b);
ModelParams perturb(const ModelParams& p, const Block& b, double step);

struct Evaluation {
    simulate::AggregateReport report;
    std::optional<solver::PolicyNetwork> policy;  // carried forward as the warm start when accepted
};
// Evaluates one parameter set. `seed` is the same for every candidate (common random numbers).
using Evaluator = std::function<Evaluation(const ModelParams&, const solver::PolicyNetwork* warm, std::uint64_t seed)>;

struct LifeCycleEvalConfig {
    std::int64_t refit_steps = 1'000'000;
    int cohort_size = 2000;
    solver::TrainConfig train;
    std::vector<std::pair<int, double>> population;  // optional counts for scaling sums
};
// Retrains from the warm policy under the candidate parameters, then simulates a cohort.
Evaluator lifecycle_evaluator(std::shared_ptr<const env::Model> base, LifeCycleEvalConfig cfg);

struct CalibrateConfig {
    int budget = 20;  // outer iterations
    double kappa_step = 0.05;
    double friction_step = 0.10;
    double shrink = 0.5;  // step factor after a block fails to improve
    std::vector<std::string> blocks;  // empty: all
    std::uint64_t seed = 1;
};

struct TraceEntry {
    int iteration = 0;
    std::string block;
    double step = 0.0;
    double value_before = 0.0;
    double best_candidate_loss = 0.0;
    bool accepted = false;
    double best_loss = 0.0;  // after this iteration
};

struct CalibrationResult {
    ModelParams params;
    double initial_loss = 0.0;
    double best_loss = 0.0;
    std::vector<TraceEntry> trace;
    std::optional<solver::PolicyNetwork> policy;
};

CalibrationResult calibrate(const ModelParams& initial, const CalibrationTargets& targets, const CalibrateConfig& cfg,
                            const Evaluator& eval, const solver::PolicyNetwork* warm = nullptr);

// utility.json and wages.json in the shipped format, plus trace.csv.
void write_calibration(const std::filesystem::path& dir, const CalibrationResult& r, const wage::WageParams& wage);

}  // namespace lcm::calibrate
