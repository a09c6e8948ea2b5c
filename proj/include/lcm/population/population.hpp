#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lcm/common/io.hpp"
#include "lcm/env/state.hpp"

namespace lcm::population {

// Quarterly probabilities indexed by integer age from 18; the last entry covers all older ages.
struct AgeHazard {
    std::vector<double> q;
    double at(double age) const;
};

// Labour-market hazards consumed by the environment's exogenous transitions.
struct ExogenousRates {
    AgeHazard layoff;                                   // FT/PT workers
    double part_time_layoff_factor = 1.3;
    std::array<std::array<double, 3>, 2> sick_onset{};  // [gender][group], per quarter
    double sick_recovery = 0.55;                        // per quarter
    double disability_after_sick = 0.25;                // at one year of sick leave
    AgeHazard disability;
    std::array<AgeHazard, 2> outsider;                  // [gender]
    double outsider_exit = 0.25;                        // per quarter
    AgeHazard student;
    double student_exit = 0.15;                         // per quarter
    std::array<double, 3> initial_study_years{1.5, 3.0, 5.0};  // by group
    int mothers_leave_quarters = 3;
    double fathers_leave_prob = 0.7;
    int fathers_leave_quarters = 1;
    std::array<double, 3> fund_member_share{0.80, 0.88, 0.93};
};

struct DemographicTables {
    std::array<std::array<double, 3>, 2> group_shares{};  // [gender][group]
    AgeHazard marriage;
    AgeHazard divorce;
    AgeHazard fertility;                                   // partnered women
    double single_fertility_factor = 0.3;
    std::array<AgeHazard, 2> mortality;                    // [gender]
    std::array<std::array<double, 3>, 3> pairing_weight{}; // [man group][woman group], scales marriage
    std::array<std::array<double, kEmploymentStateCount>, 2> initial_states{};  // age 18, [gender][state]
    ExogenousRates rates;

    void validate() const;
};

DemographicTables tables_from_json(const Json& doc);
Json to_json(const DemographicTables& t);
DemographicTables load_tables(const std::filesystem::path& path);

struct CohortPopulation {
    std::vector<env::HouseholdState> households;
    std::uint64_t seed = 0;
    int size() const { return static_cast<int>(households.size()); }
};

// Quarters until an event with the given hazard fires, starting next quarter at `age`.
// Returns env::kNever when no event occurs before age 100.
int draw_clock(const AgeHazard& h, double age, Rng& rng, double factor = 1.0);
// Like draw_clock, but the event is certain by age 100.
int draw_life_left(const AgeHazard& h, double age, Rng& rng);

// n households, each holding one man and one woman aged 18.
CohortPopulation init_population(int n, const DemographicTables& t, std::uint64_t seed);

// Per-household steps; each consumes the household's own random stream.
bool mortality_step(env::HouseholdState& hh, const DemographicTables& t);   // true if someone died
void partnership_step(env::HouseholdState& hh, const DemographicTables& t);
bool fertility_step(env::HouseholdState& hh, const DemographicTables& t);   // true if a child was born

void mortality_step(CohortPopulation& pop, const DemographicTables& t);
void partnership_step(CohortPopulation& pop, const DemographicTables& t);
void fertility_step(CohortPopulation& pop, const DemographicTables& t);

// Re-draws the fertility clock after a change of partnership or death.
void redraw_birth_clock(env::HouseholdState& hh, const DemographicTables& t);

Json to_json(const env::AgentState& a);
Json to_json(const env::HouseholdState& h);
env::HouseholdState household_from_json(const Json& j);
Json to_json(const CohortPopulation& pop);
CohortPopulation population_from_json(const Json& j);

}  // namespace lcm::population
