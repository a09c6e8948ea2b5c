#pragma once

#include <array>
#include <bit>
#include <cstdint>

#include "lcm/common/rng.hpp"
#include "lcm/common/types.hpp"

namespace lcm::env {

// Clock value for events that will not happen before the end of life.
inline constexpr int kNever = 1 << 20;

struct AgentState {
    Gender gender = Gender::Male;
    int group = 1;
    double age = kStartAge;

    // employment
    EmploymentState state = EmploymentState::Student;
    EmploymentState return_state = EmploymentState::LaborMarketSupport;  // where a leave/spell ends
    int hours = 0;
    double time_in_state = 0.0;  // years
    double potential_wage = 0.0;  // €/yr
    double previous_wage = 0.0;   // paid wage last quarter, €/yr
    double paid_wage = 0.0;       // €/yr
    double wage_reduction = 0.0;
    double wage_basis = 0.0;      // €/mo, smoothed earnings for benefits
    bool pink_slip = false;
    double career_years = 0.0;

    // retirement
    double early_pension_share = 0.0;
    double partial_pension = 0.0;       // €/mo partial early pension in payment
    double partial_base = 0.0;          // accrual converted at the partial draw, €/mo
    double pension_accrued = 0.0;       // €/mo
    double pension_paid = 0.0;          // €/mo earnings-related pension in payment
    double basic_pension = 0.0;         // €/mo, derived

    // unemployment
    std::uint16_t work_history = 0;     // bit k: worked >= min hours k+1 quarters ago (9 used)
    bool employment_condition = false;
    bool condition_at_58 = false;
    bool new_condition = false;
    double er_began_age = 0.0;
    bool fund_member = true;
    int er_days_left = 0;
    int er_days_used = 0;
    int er_max_days = 400;
    double unemp_wage_basis = 0.0;      // €/mo
    double unemp_wage = 0.0;            // wage while unemployed, €/yr
    bool unemployed_past_ret_age = false;

    // time-to clocks, quarters
    int until_disability = kNever;
    int until_student = kNever;
    int until_outsider = kNever;
    int life_left = kNever;
    int spell_left = 0;                 // leave / sick / outside / study spell
    int sick_quarters = 0;

    bool alive() const { return state != EmploymentState::Dead; }
    int worked_quarters(int window) const {
        return std::popcount(static_cast<unsigned>(work_history & ((1u << window) - 1u)));
    }
};

inline constexpr int kMaxChildren = 12;

struct HouseholdState {
    std::array<AgentState, 2> agents{};  // [0] man, [1] woman
    bool partnered = false;
    int n_children = 0;
    std::array<int, kMaxChildren> child_age_q{};  // child ages in quarters
    int until_birth = kNever;
    int until_marriage = kNever;
    int until_divorce = kNever;
    int quarter = 0;                     // quarters since age 18
    std::uint64_t id = 0;
    Rng rng{0};

    int children_under(double years) const {
        int n = 0;
        for (int i = 0; i < n_children; ++i) {
            if (child_age_q[static_cast<std::size_t>(i)] < static_cast<int>(years * kQuartersPerYear)) ++n;
        }
        return n;
    }
    int children_under3() const { return children_under(3.0); }
    int children_under7() const { return children_under(7.0); }
    int children_under18() const { return children_under(18.0); }
    double age() const { return kStartAge + quarter * kQuarter; }
};

}  // namespace lcm::env
