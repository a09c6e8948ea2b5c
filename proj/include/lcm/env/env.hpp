#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>

#include "lcm/env/state.hpp"
#include "lcm/env/transitions.hpp"
#include "lcm/env/utility.hpp"
#include "lcm/population/population.hpp"
#include "lcm/rules/engine.hpp"
#include "lcm/rules/ruleset.hpp"
#include "lcm/wage/wage.hpp"

namespace lcm::env {

struct Model {
    rules::RuleSet rules;
    wage::WageModel wage;
    population::DemographicTables demo;
    UtilityParams utility;

    int year() const { return rules.year; }
    double deflator() const { return utility.deflator_for(rules.year); }
    double min_retirement_age() const { return rules.pension.min_retirement_age; }
    DecisionContext context(const HouseholdState& hh) const;
};

// Reads rules/rules_<year>.json and model/{wages,demographics,utility}.json under `params_dir`.
Model load_model(const std::filesystem::path& params_dir, int year);

// Initial wages for a freshly drawn household.
void prepare_household(HouseholdState& hh, const Model& m);
population::CohortPopulation make_cohort(int n, const Model& m, std::uint64_t seed);

// A couple forms one benefit unit; otherwise each adult is their own unit and the
// children live with the mother (with the father if she has died).
struct QuarterCash {
    std::array<rules::CashFlows, 2> unit{};
    int units = 0;
    std::array<int, 2> unit_of{-1, -1};
    std::array<int, 2> slot_of{0, 0};
    std::array<double, 2> consumption{};  // per agent, €/quarter

    const rules::Flows* adult_flows(int who) const;
};

std::array<rules::HouseholdSnapshot, 2> benefit_units(const HouseholdState& hh, const Model& m, QuarterCash& layout);
QuarterCash quarter_cash(const HouseholdState& hh, const Model& m);

struct StepResult {
    std::array<double, 2> reward{};         // includes the discounted static-phase value on the last step
    std::array<double, 2> terminal_value{};
    QuarterCash cash;
    std::array<EmploymentState, 2> decided{};  // state after decisions, before exogenous moves
    bool done = false;
};

// One quarter: decisions with job-search friction, cash flows and rewards, then
// wage/accrual updates, demographics and the exogenous moves seen at the next decision.
// On the last decision step the static phase is run and also reported to `on_quarter`.
// Sees the household during a paid quarter: after decisions, before ageing and exogenous moves.
using QuarterCallback = std::function<void(const HouseholdState&, const QuarterCash&)>;

StepResult step(HouseholdState& hh, const std::array<Action, 2>& actions, const Model& m,
                TransitionAudit* audit = nullptr, const QuarterCallback& on_quarter = {});

// Applies one agent's decision; returns the realized employment state.
EmploymentState apply_decision(HouseholdState& hh, int who, Action a, const Model& m);

// Exogenous move for one agent after the quarter's decisions, if any. Advances that
// agent's event clocks. `quarter_start` is the state before decisions.
std::optional<EmploymentState> exogenous_transition(HouseholdState& hh, int who, const Model& m,
                                                    EmploymentState quarter_start, bool birth);

// Frozen states from 75 to death or 100. Living agents who are not pensioners retire.
struct StaticResult {
    std::array<double, 2> value{};  // discounted to the first static quarter
    double pension_paid = 0.0;      // € total over the phase
    int quarters = 0;
};
StaticResult static_phase(HouseholdState hh, const Model& m, const QuarterCallback& on_quarter = {});

// Pension in payment when retiring now.
double retirement_pension(const AgentState& a, const Model& m);
int max_benefit_days(const AgentState& a, const rules::RuleSet& r);
bool employment_condition_met(const AgentState& a, const rules::RuleSet& r);

}  // namespace lcm::env
