#include "lcm/env/transitions.hpp"

#include <string>

namespace lcm::env {

using S = EmploymentState;

namespace {

// Rows and columns in table order: FT Re Di Un Mo Fa Su RP RF PT Ou St Lm Si
constexpr std::array<S, 14> kOrder{S::FullTime, S::Retired, S::Disabled, S::EarningsRelatedUnemployed,
                                   S::MothersLeave, S::FathersLeave, S::ChildHomeCare, S::RetiredPartTime,
                                   S::RetiredFullTime, S::PartTime, S::OutsideWorkforce, S::Student,
                                   S::LaborMarketSupport, S::SickLeave};

constexpr std::array<std::string_view, 14> kRows{
    "DDEEEED--DEEDE",  // FT
    "-DE----DD-----",  // Re
    "-EE-----------",  // Di
    "DDEEEED--DEEDE",  // Un
    "**EEEE*--*EE*E",  // Mo
    "**EEEE*--*EE*E",  // Fa
    "D-EEEED--DEEDE",  // Su
    "-DE----DD-----",  // RP
    "-DE----DD-----",  // RF
    "DDEEEED--DEEEE",  // PT
    "--EEEEE--DEEEE",  // Ou
    "--E-EEE--DEEE-",  // St
    "DDE-EEE--DEEDE",  // Lm
    "^EE^EE^--^--^E",  // Si
};

int table_index(S s) {
    if (s == S::ExtendedUnemployed) s = S::EarningsRelatedUnemployed;
    for (std::size_t i = 0; i < kOrder.size(); ++i) {
        if (kOrder[i] == s) return static_cast<int>(i);
    }
    return -1;
}

}  // namespace

char transition_cell(S from, S to) {
    if (to == S::Dead) return 'E';
    const int r = table_index(from);
    const int c = table_index(to);
    if (r < 0 || c < 0) return '-';
    return kRows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
}

bool is_legal_move(S from, S to) {
    if (to == S::Dead) return true;
    if (from == S::Dead) return false;
    return transition_cell(from, to) != '-';
}

std::string_view to_string(Action a) {
    static constexpr std::array<std::string_view, kActionCount> names{
        "stay",         "full_time_32",     "full_time_40",     "full_time_48",     "part_time_8",
        "part_time_16", "part_time_24",     "quit",             "retire",           "partial_early_25",
        "partial_early_50", "home_care",    "retired_work_8",   "retired_work_16",  "retired_work_24",
        "retired_work_32",  "retired_work_40", "retired_work_48"};
    return names[static_cast<std::size_t>(a)];
}

int action_hours(Action a) {
    switch (a) {
        case Action::FullTime32: return 32;
        case Action::FullTime40: return 40;
        case Action::FullTime48: return 48;
        case Action::PartTime8: return 8;
        case Action::PartTime16: return 16;
        case Action::PartTime24: return 24;
        case Action::RetiredWork8: return 8;
        case Action::RetiredWork16: return 16;
        case Action::RetiredWork24: return 24;
        case Action::RetiredWork32: return 32;
        case Action::RetiredWork40: return 40;
        case Action::RetiredWork48: return 48;
        default: return 0;
    }
}

ActionMask legal_mask(const AgentState& a, const DecisionContext& ctx) {
    ActionMask m{};
    m[static_cast<std::size_t>(Action::Stay)] = true;
    if (!a.alive()) return m;

    auto allow = [&m](Action x) { m[static_cast<std::size_t>(x)] = true; };
    auto full_time = [&] { allow(Action::FullTime32); allow(Action::FullTime40); allow(Action::FullTime48); };
    auto part_time = [&] { allow(Action::PartTime8); allow(Action::PartTime16); allow(Action::PartTime24); };
    const bool can_retire = a.age >= ctx.min_retirement_age;
    const bool can_partial = a.age >= ctx.partial_early_min_age && a.age < ctx.min_retirement_age &&
                             a.early_pension_share == 0.0;

    switch (a.state) {
        case S::FullTime:
        case S::PartTime:
            full_time();
            part_time();
            if (a.state == S::FullTime) allow(Action::Quit);
            if (can_retire) allow(Action::Retire);
            if (can_partial) {
                allow(Action::PartialEarly25);
                allow(Action::PartialEarly50);
            }
            if (ctx.child_under3) allow(Action::HomeCare);
            break;
        case S::EarningsRelatedUnemployed:
        case S::ExtendedUnemployed:
            full_time();
            part_time();
            allow(Action::Quit);
            if (can_retire) allow(Action::Retire);
            if (ctx.child_under3) allow(Action::HomeCare);
            break;
        case S::LaborMarketSupport:
            full_time();
            part_time();
            if (can_retire) allow(Action::Retire);
            break;
        case S::ChildHomeCare:
            full_time();
            part_time();
            allow(Action::Quit);
            break;
        case S::MothersLeave:
        case S::FathersLeave:
        case S::SickLeave:
            if (a.spell_left > 0) break;
            full_time();
            part_time();
            allow(Action::Quit);
            if (ctx.child_under3) allow(Action::HomeCare);
            if (a.state != S::SickLeave && can_retire) allow(Action::Retire);
            break;
        case S::OutsideWorkforce:
        case S::Student:
            part_time();
            break;
        case S::Retired:
        case S::RetiredPartTime:
        case S::RetiredFullTime:
            for (int i = 0; i < 6; ++i) allow(static_cast<Action>(static_cast<int>(Action::RetiredWork8) + i));
            allow(Action::Retire);
            break;
        default:
            break;
    }
    return m;
}

std::vector<Action> legal_actions(const AgentState& a, const DecisionContext& ctx) {
    const auto m = legal_mask(a, ctx);
    std::vector<Action> out;
    for (int i = 0; i < kActionCount; ++i) {
        if (m[static_cast<std::size_t>(i)]) out.push_back(static_cast<Action>(i));
    }
    return out;
}

void TransitionAudit::record_decision(S from, S to) { ++decision[index_of(from)][index_of(to)]; }
void TransitionAudit::record_exogenous(S from, S to) { ++exogenous[index_of(from)][index_of(to)]; }
void TransitionAudit::record_quarter(S from, S to) { ++quarter[index_of(from)][index_of(to)]; }

std::uint64_t TransitionAudit::violations() const {
    std::uint64_t v = 0;
    for (int i = 0; i < kEmploymentStateCount; ++i) {
        for (int k = 0; k < kEmploymentStateCount; ++k) {
            const auto from = static_cast<S>(i);
            const auto to = static_cast<S>(k);
            if (from == to || is_legal_move(from, to)) continue;
            v += decision[i][k] + exogenous[i][k] + quarter[i][k];
        }
    }
    return v;
}

std::uint64_t TransitionAudit::total() const {
    std::uint64_t t = 0;
    for (int i = 0; i < kEmploymentStateCount; ++i) {
        for (int k = 0; k < kEmploymentStateCount; ++k) t += quarter[i][k];
    }
    return t;
}

TransitionAudit& TransitionAudit::operator+=(const TransitionAudit& o) {
    for (int i = 0; i < kEmploymentStateCount; ++i) {
        for (int k = 0; k < kEmploymentStateCount; ++k) {
            decision[i][k] += o.decision[i][k];
            exogenous[i][k] += o.exogenous[i][k];
            quarter[i][k] += o.quarter[i][k];
        }
    }
    return *this;
}

}  // namespace lcm::env
