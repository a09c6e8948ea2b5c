#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lcm/common/io.hpp"
#include "lcm/env/env.hpp"
#include "lcm/solver/a2c.hpp"
#include "lcm/solver/network.hpp"

namespace lcm::simulate {

inline constexpr int kFirstAge = 18;
inline constexpr int kReportAges = 82;  // 18..99
inline constexpr int kHoursBins = 7;    // 0, 8, 16, 24, 32, 40, 48 h/week
inline constexpr int kDurationBands = 5;
inline constexpr int kDurationBins = 5;
inline constexpr int kRateBins = 12;    // < 0, [0, 0.1), ..., [0.9, 1.0), >= 1.0
inline constexpr int kErDaysPerQuarter = 65;

// Spell-start age bands of the duration table; 18-19 fold into the first band.
inline constexpr std::array<int, kDurationBands> kDurationBandLower{18, 30, 40, 50, 60};
inline constexpr std::array<const char*, kDurationBands> kDurationBandNames{"20-29", "30-39", "40-49", "50-59",
                                                                            "60-65"};
// Upper edges in used ER benefit days: 6, 12, 18, 24 months.
inline constexpr std::array<int, kDurationBins - 1> kDurationEdges{130, 260, 390, 520};
inline constexpr std::array<const char*, kDurationBins> kDurationBinNames{"0-6m", "6-12m", "12-18m", "18-24m",
                                                                          "over24m"};

int duration_band(double start_age);
int duration_bin(int er_days);
int rate_bin(double rate);

// One living agent in one paid quarter. Household-level flows of a benefit unit
// (child/housing benefit, social assistance, day care fee, VAT) are booked on the
// unit's first living adult.
struct QuarterRecord {
    std::uint32_t household = 0;
    std::uint8_t who = 0;
    std::uint8_t gender = 0;
    std::uint8_t state = 0;
    std::uint8_t hours = 0;
    std::uint16_t quarter = 0;  // since age 18
    std::uint8_t phase = 0;     // 0 decision phase, 1 static phase
    std::uint8_t er_days = 0;   // ER benefit days paid this quarter
    float gross = 0, net = 0, consumption = 0, vat = 0;
    std::array<float, rules::kBenefitCount> benefits{};
    std::array<float, rules::kTaxCount> taxes{};
    std::array<float, rules::kContributionCount> contributions{};
    std::array<float, rules::kEmployerContributionCount> employer{};
    float emtr = std::numeric_limits<float>::quiet_NaN();
    float ptr = std::numeric_limits<float>::quiet_NaN();

    double age() const { return kFirstAge + quarter * 0.25; }
};

// Records ordered by household, then quarter, then agent.
struct EpisodeLog {
    int households = 0;
    std::vector<QuarterRecord> records;
};

struct RunOptions {
    solver::ActMode mode = solver::ActMode::Sample;
    bool rates = true;     // EMTR / PTR per working-age agent, once a year
    bool keep_log = true;  // false: stream into the report only
};

struct AggregateReport;

struct CohortRun {
    EpisodeLog log;  // empty unless keep_log
    std::unique_ptr<AggregateReport> report;
    env::TransitionAudit audit;
};

// Decisions 18-75 with the policy, then the static phase to 100. Households run in
// parallel; each draws actions from its own stream, so results do not depend on threads.
CohortRun run_cohort(const solver::PolicyNetwork& policy, const population::CohortPopulation& pop,
                     const env::Model& m, std::uint64_t seed, const RunOptions& opt = {});

// Everything is indexed by age in years (row) so population scaling is a row multiply.
// Counts are agent-years, money is € summed over the cohort.
struct AggregateReport {
    template <typename T>
    using ByAge = std::array<T, kReportAges>;
    using G2 = std::array<double, 2>;

    int households = 0;
    ByAge<G2> alive{}, employed{}, unemployed{}, fte{}, ft_employed{}, pt_employed{}, pensioners{};
    ByAge<G2> disabled{}, outside{};
    ByAge<std::array<double, kEmploymentStateCount>> occupancy{};
    ByAge<std::array<double, rules::kBenefitCount>> benefits{};
    ByAge<std::array<double, rules::kTaxCount>> taxes{};
    ByAge<std::array<double, rules::kContributionCount>> contributions{};
    ByAge<std::array<double, rules::kEmployerContributionCount>> employer{};
    ByAge<double> wages{}, wages_ft{}, wages_pt{}, consumption{}, vat{}, net{};
    ByAge<std::array<double, kHoursBins>> hours{};
    ByAge<std::array<double, kDurationBins>> er_spells{};  // by spell-start age
    ByAge<double> er_spell_days{};
    ByAge<std::array<double, kRateBins>> emtr{}, ptr{};

    void add(const QuarterRecord& r);
    // Closes an ER-paid unemployment spell.
    void add_spell(double start_age, int er_days);
    AggregateReport& operator+=(const AggregateReport& o);

    // Rates use the living population aged [lo, hi]; gender -1 = both.
    double employment_rate(int lo = 18, int hi = 64, int gender = -1) const;
    double unemployment_rate(int lo = 18, int hi = 64, int gender = -1) const;  // of the labour force
    double workforce(int lo = 18, int hi = 64, bool include_pensioners = false) const;
    double occupancy_share(int age, EmploymentState s) const;
    double total_fte() const;
    double total_employed() const;
    double total_benefits() const;
    double total_benefit(rules::Benefit b) const;
    double total_taxes() const;  // including VAT
    double total_contributions() const;  // employee + employer
    double total_wages() const;
    double total_consumption() const;
    double public_net() const { return total_taxes() + total_contributions() - total_benefits(); }
    std::array<std::array<double, kDurationBins>, kDurationBands> duration_table() const;  // rows sum to 1
    double er_spell_count() const;
    double mean_er_spell_days() const;
};

// Sum of an age x gender table over ages [lo, hi]; gender -1 = both.
double sum_ages(const AggregateReport::ByAge<AggregateReport::G2>& t, int lo, int hi, int gender = -1);

AggregateReport aggregate(const EpisodeLog& log);

// Second implementation of the ER spell statistics: groups records per agent and scans runs.
struct Spell {
    std::uint32_t household = 0;
    int who = 0;
    double start_age = 0.0;
    int quarters = 0;
    int er_days = 0;
};
std::vector<Spell> scan_unemployment_spells(const EpisodeLog& log);

// Multiplies every age row by its factor; rates are unchanged when factors are uniform.
AggregateReport scale_to_population(const AggregateReport& r, const std::array<double, kReportAges>& factors);
// Factor per age = population count / simulated living agent-years at that age.
std::array<double, kReportAges> population_factors(const AggregateReport& r, const std::vector<std::pair<int, double>>& counts);
std::vector<std::pair<int, double>> load_population_counts(const std::filesystem::path& csv);

// Named scalar cells used by the repeat protocol and comparisons.
std::vector<std::pair<std::string, double>> report_cells(const AggregateReport& r);

// CSV tables plus summary.json in `dir`.
void write_report(const std::filesystem::path& dir, const AggregateReport& r);

struct RepeatConfig {
    std::int64_t refit_steps = 5'000'000;  // 0: simulate the base policy as is
    int repeats = 2;
    int cohort_size = 50'000;
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> repeat_seeds;  // overrides seed-derived repeat seeds when non-empty
    solver::TrainConfig train;                // refit settings; total_steps and seed are set per repeat
    RunOptions run{solver::ActMode::Sample, false, false};
};

struct CellStats {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
};

struct RepeatResult {
    std::vector<std::vector<std::pair<std::string, double>>> cells;  // per repeat
    std::vector<CellStats> stats;
    AggregateReport mean_report;
};

std::uint64_t repeat_seed(const RepeatConfig& cfg, int i);
RepeatResult repeat_protocol(const solver::PolicyNetwork& base, std::shared_ptr<const env::Model> m,
                             const RepeatConfig& cfg);
std::vector<CellStats> cell_stats(const std::vector<std::vector<std::pair<std::string, double>>>& per_repeat);

}  // namespace lcm::simulate
