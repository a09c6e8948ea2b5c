#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace lcm {

enum class Gender : std::uint8_t { Male = 0, Female = 1 };

// Employment states. Order is part of the checkpoint/feature layout; append only.
enum class EmploymentState : std::uint8_t {
    EarningsRelatedUnemployed = 0,
    FullTime,
    PartTime,
    Retired,
    Disabled,
    ExtendedUnemployed,
    MothersLeave,
    FathersLeave,
    ChildHomeCare,
    RetiredPartTime,
    RetiredFullTime,
    OutsideWorkforce,
    Student,
    LaborMarketSupport,
    SickLeave,
    Dead,
};

inline constexpr int kEmploymentStateCount = 16;

// Quarterly time grid.
inline constexpr double kQuarter = 0.25;
inline constexpr int kQuartersPerYear = 4;
inline constexpr int kStartAge = 18;
inline constexpr int kDecisionEndAge = 75;
inline constexpr int kEndAge = 100;

// Allowed weekly hours; 8/16/24 are part time, 32/40/48 full time.
inline constexpr std::array<int, 6> kWeeklyHours{8, 16, 24, 32, 40, 48};

constexpr int index_of(EmploymentState s) { return static_cast<int>(s); }
constexpr int index_of(Gender g) { return static_cast<int>(g); }

constexpr bool is_working(EmploymentState s) {
    return s == EmploymentState::FullTime || s == EmploymentState::PartTime ||
           s == EmploymentState::RetiredPartTime || s == EmploymentState::RetiredFullTime;
}

constexpr bool is_unemployed(EmploymentState s) {
    return s == EmploymentState::EarningsRelatedUnemployed ||
           s == EmploymentState::ExtendedUnemployed || s == EmploymentState::LaborMarketSupport;
}

constexpr bool is_pensioner(EmploymentState s) {
    return s == EmploymentState::Retired || s == EmploymentState::RetiredPartTime ||
           s == EmploymentState::RetiredFullTime || s == EmploymentState::Disabled;
}

constexpr bool is_part_time_hours(int hours) { return hours > 0 && hours <= 24; }

constexpr bool is_valid_hours(int hours) {
    for (int h : kWeeklyHours) {
        if (h == hours) return true;
    }
    return false;
}

std::string_view to_string(EmploymentState s);
std::string_view short_name(EmploymentState s);
std::optional<EmploymentState> parse_employment_state(std::string_view name);
std::string_view to_string(Gender g);

}  // namespace lcm
