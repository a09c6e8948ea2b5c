#include "lcm/common/types.hpp"

#include "lcm/common/rng.hpp"

#include <cmath>
#include <numbers>

namespace lcm {

namespace {

struct StateNames {
    std::string_view name;
    std::string_view abbrev;
};

constexpr std::array<StateNames, kEmploymentStateCount> kStateNames{{
    {"earnings_related_unemployed", "Un"},
    {"full_time", "FT"},
    {"part_time", "PT"},
    {"retired", "Re"},
    {"disabled", "Di"},
    {"extended_unemployed", "Ex"},
    {"mothers_leave", "Mo"},
    {"fathers_leave", "Fa"},
    {"child_home_care", "Su"},
    {"retired_part_time", "RP"},
    {"retired_full_time", "RF"},
    {"outside_workforce", "Ou"},
    {"student", "St"},
    {"labor_market_support", "Lm"},
    {"sick_leave", "Si"},
    {"dead", "De"},
}};

}  // namespace

std::string_view to_string(EmploymentState s) { return kStateNames[index_of(s)].name; }

std::string_view short_name(EmploymentState s) { return kStateNames[index_of(s)].abbrev; }

std::optional<EmploymentState> parse_employment_state(std::string_view name) {
    for (int i = 0; i < kEmploymentStateCount; ++i) {
        if (kStateNames[i].name == name || kStateNames[i].abbrev == name) {
            return static_cast<EmploymentState>(i);
        }
    }
    return std::nullopt;
}

std::string_view to_string(Gender g) { return g == Gender::Male ? "male" : "female"; }

double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace lcm
