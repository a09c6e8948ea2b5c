#pragma once

#include <array>
#include <filesystem>
#include <map>

#include "lcm/common/io.hpp"
#include "lcm/env/state.hpp"

namespace lcm::env {

struct UtilityParams {
    // [gender][hours index 8..48]
    std::array<std::array<double, 6>, 2> kappa_work{};
    std::array<double, 2> kappa_home_care{};
    std::array<double, 2> kappa_under3{};  // non-working parent of a child under 3
    std::array<double, 2> kappa_student{};
    std::array<double, 2> kappa_retired{};
    std::array<double, 2> kappa_sick{};
    std::array<std::array<double, 3>, 2> kappa_unemp{};  // [gender][young, middle, elderly], quitters only
    std::array<double, 2> unemp_age_cuts{30.0, 55.0};

    std::array<double, 2> s_age_offset{5.0, 3.0};   // S_age = r_age - offset
    std::array<double, 2> s_ret_offset{15.0, 15.0}; // S_ret = r_age + offset
    std::array<double, 2> q1{0.075, 0.065};         // per 40 h/week
    std::array<double, 2> q2{0.035, 0.015};

    double gamma = 0.92;  // per year
    double dt = kQuarter;
    std::map<int, double> deflator;  // year -> D, €/quarter

    double step_discount() const;
    double deflator_for(int year) const;
    void validate() const;
};

UtilityParams default_utility_params();
UtilityParams utility_from_json(const Json& doc);
Json to_json(const UtilityParams& p);
UtilityParams load_utility(const std::filesystem::path& path);

double kappa(const AgentState& a, bool child_under3, const UtilityParams& p);
double mu_term(double age, Gender g, int hours, double r_age, const UtilityParams& p);

// Period utility; 0 for the dead. Throws ContractViolation on c <= 0 for the living.
double utility(const AgentState& a, double consumption, bool child_under3, double r_age, double deflator,
               const UtilityParams& p);

}  // namespace lcm::env
