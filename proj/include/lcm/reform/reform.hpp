#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lcm/common/io.hpp"
#include "lcm/env/env.hpp"
#include "lcm/rules/ruleset.hpp"
#include "lcm/simulate/simulate.hpp"

namespace lcm::reform {

// One named delta. Fields in `args` depend on the name; "set" takes {path, value}
// with a JSON pointer into the serialized RuleSet.
struct Delta {
    std::string name;
    Json args = Json::object();
};

struct ReformSpec {
    std::string name;
    std::vector<Delta> deltas;  // applied in order
};

// Implemented delta names.
const std::vector<std::string>& delta_names();
// Names held for reforms the model does not implement; rejected on use.
const std::vector<std::string>& reserved_names();

ReformSpec reform_from_json(const Json& doc);
Json to_json(const ReformSpec& spec);
ReformSpec load_reform(const std::filesystem::path& path);

struct AuditEntry {
    std::string delta;
    std::string path;
    Json before;
    Json after;
};

struct Applied {
    rules::RuleSet rules;
    std::vector<AuditEntry> audit;
};

// Throws ConfigError for unknown or reserved delta names, unknown field paths
// (the message names the path) and patched rule sets that fail validation.
Applied apply_reform(const rules::RuleSet& base, const ReformSpec& spec);
// Undoes an audit log in reverse order.
rules::RuleSet revert_reform(const rules::RuleSet& patched, const std::vector<AuditEntry>& audit);

// Default grading: 100 % for 40 days, 80 % to 170 days, then 75 %.
std::vector<rules::GradingStep> default_grading();

using Cells = std::vector<std::pair<std::string, double>>;

struct CellComparison {
    std::string name;
    double baseline = 0.0, reform = 0.0;  // arm means
    double difference = 0.0;             // reform - baseline
    double baseline_sd = 0.0, reform_sd = 0.0;
    double std_error = 0.0;   // sqrt(sd_b^2/n_b + sd_r^2/n_r)
    double threshold = 0.0;   // minimal significant difference
    bool significant = false;
};

struct ComparisonReport {
    double confidence = 0.99;
    int baseline_repeats = 0, reform_repeats = 0;
    std::vector<CellComparison> cells;
    const CellComparison& cell(std::string_view name) const;
};

// One-sided normal quantile times the two-sample standard error.
double significance_threshold(double sd_a, int n_a, double sd_b, int n_b, double confidence);

ComparisonReport compare_runs(const std::vector<Cells>& baseline, const std::vector<Cells>& reform,
                              double confidence = 0.99);

// Paired-seed test on per-repeat differences d_i = reform_i - baseline_i, one-sided in
// the requested direction with Student t at n-1 degrees of freedom.
struct PairedTest {
    int n = 0;
    double mean = 0.0, sd = 0.0, t = 0.0, critical = 0.0;
    bool significant = false;
};
enum class Direction { Lower, Higher };
PairedTest paired_test(const std::vector<double>& baseline, const std::vector<double>& reform, Direction dir,
                       double confidence = 0.95);
std::vector<double> cell_series(const std::vector<Cells>& repeats, std::string_view name);

struct PipelineResult {
    simulate::RepeatResult baseline;
    simulate::RepeatResult reform;
    ComparisonReport comparison;
    std::vector<AuditEntry> audit;
};

// Both arms start from the same checkpoint, refit under their own rules with identical
// utility parameters, and share repeat seeds so repeat i sees the same population.
PipelineResult reform_pipeline(const solver::PolicyNetwork& base, std::shared_ptr<const env::Model> baseline_model,
                               const ReformSpec& spec, const simulate::RepeatConfig& cfg);

// comparison.csv plus employment, finance and duration tables.
void write_comparison(const std::filesystem::path& dir, const PipelineResult& r);

}  // namespace lcm::reform
