#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "lcm/env/state.hpp"

namespace lcm::env {

// Cell of the employment transition table: '-' not applicable, 'D' decision,
// 'E' exogenous, '*' decision after an exogenous spell, '^' the same unless disabled.
char transition_cell(EmploymentState from, EmploymentState to);
// Any non-'-' cell; moves into Dead are always legal.
bool is_legal_move(EmploymentState from, EmploymentState to);

enum class Action : std::uint8_t {
    Stay = 0,
    FullTime32,
    FullTime40,
    FullTime48,
    PartTime8,
    PartTime16,
    PartTime24,
    Quit,
    Retire,
    PartialEarly25,
    PartialEarly50,
    HomeCare,
    RetiredWork8,
    RetiredWork16,
    RetiredWork24,
    RetiredWork32,
    RetiredWork40,
    RetiredWork48,
};
inline constexpr int kActionCount = 18;

std::string_view to_string(Action a);
int action_hours(Action a);  // 0 unless the action chooses hours

using ActionMask = std::array<bool, kActionCount>;

struct DecisionContext {
    double min_retirement_age = 64.0;
    double partial_early_min_age = 61.0;
    bool child_under3 = false;
};

ActionMask legal_mask(const AgentState& a, const DecisionContext& ctx);
std::vector<Action> legal_actions(const AgentState& a, const DecisionContext& ctx);

// Realized employment moves, tallied per stage.
struct TransitionAudit {
    std::array<std::array<std::uint64_t, kEmploymentStateCount>, kEmploymentStateCount> decision{};
    std::array<std::array<std::uint64_t, kEmploymentStateCount>, kEmploymentStateCount> exogenous{};
    std::array<std::array<std::uint64_t, kEmploymentStateCount>, kEmploymentStateCount> quarter{};  // start to end

    void record_decision(EmploymentState from, EmploymentState to);
    void record_exogenous(EmploymentState from, EmploymentState to);
    void record_quarter(EmploymentState from, EmploymentState to);
    std::uint64_t violations() const;
    std::uint64_t total() const;
    TransitionAudit& operator+=(const TransitionAudit& o);
};

}  // namespace lcm::env
