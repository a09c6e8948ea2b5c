#include "lcm/env/utility.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lcm/common/errors.hpp"

namespace lcm::env {

using S = EmploymentState;

double UtilityParams::step_discount() const { return std::pow(gamma, dt); }

double UtilityParams::deflator_for(int year) const {
    if (deflator.empty()) throw ConfigError("utility: empty deflator series");
    auto it = deflator.find(year);
    if (it != deflator.end()) return it->second;
    // outside the table: nearest year
    if (year < deflator.begin()->first) return deflator.begin()->second;
    return deflator.rbegin()->second;
}

void UtilityParams::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("utility.gamma: must be in (0,1)");
    if (!(dt > 0.0)) throw ConfigError("utility.dt: must be > 0");
    for (int g = 0; g < 2; ++g) {
        const auto& k = kappa_work[static_cast<std::size_t>(g)];
        for (std::size_t i = 1; i < k.size(); ++i) {
            if (k[i] > k[i - 1]) throw ConfigError("utility.kappa_work: more hours must not be penalized less");
        }
    }
    if (!(unemp_age_cuts[0] < unemp_age_cuts[1])) throw ConfigError("utility.unemp_age_cuts: must increase");
    for (const auto& [y, d] : deflator) {
        if (!(d > 0.0)) throw ConfigError("utility.deflator: must be positive");
    }
}

UtilityParams default_utility_params() {
    UtilityParams p;
    p.kappa_work = {{{-0.360, -0.390, -0.450, -0.550, -0.705, -1.400}, {-0.270, -0.320, -0.345, -0.365, -0.490, -1.400}}};
    p.kappa_home_care = {0.005, 0.050};
    p.kappa_under3 = {0.005, 0.010};
    p.kappa_student = {0.0, 0.0};
    p.kappa_retired = {0.0, 0.0};
    p.kappa_sick = {-0.5, -0.5};
    p.kappa_unemp = {{{-0.250, -0.150, -0.100}, {-0.100, -0.400, -0.100}}};
    for (int y = 2018; y <= 2024; ++y) p.deflator[y] = std::round(400000.0 * std::pow(1.02, y - 2018)) / 100.0;
    return p;
}

namespace {

std::array<double, 2> pair_of(const Json& j, const char* key) {
    const auto v = require_number_array(j, key, "utility");
    if (v.size() != 2) throw ConfigError(std::string("utility.") + key + ": expected [men, women]");
    return {v[0], v[1]};
}

}  // namespace

UtilityParams utility_from_json(const Json& doc) {
    UtilityParams p;
    try {
        const auto& k = doc.at("kappa");
        for (int g = 0; g < 2; ++g) {
            const char* gk = g == 0 ? "male" : "female";
            const auto w = require_number_array(k.at("work"), gk, "utility.kappa.work");
            const auto u = require_number_array(k.at("unemployed"), gk, "utility.kappa.unemployed");
            if (w.size() != 6) throw ConfigError("utility.kappa.work: expected 6 hour levels");
            if (u.size() != 3) throw ConfigError("utility.kappa.unemployed: expected young/middle/elderly");
            std::copy(w.begin(), w.end(), p.kappa_work[static_cast<std::size_t>(g)].begin());
            std::copy(u.begin(), u.end(), p.kappa_unemp[static_cast<std::size_t>(g)].begin());
        }
        p.kappa_home_care = pair_of(k, "home_care");
        p.kappa_under3 = pair_of(k, "under3_child");
        p.kappa_student = pair_of(k, "student");
        p.kappa_retired = pair_of(k, "retired");
        p.kappa_sick = pair_of(k, "sick_leave");
        p.unemp_age_cuts = pair_of(k, "unemployed_age_cuts");
        p.s_age_offset = pair_of(doc, "s_age_offset");
        p.s_ret_offset = pair_of(doc, "s_ret_offset");
        p.q1 = pair_of(doc, "q1");
        p.q2 = pair_of(doc, "q2");
        p.gamma = require_number(doc, "gamma", "utility");
        p.dt = require_number(doc, "dt", "utility");
        for (const auto& [year, d] : doc.at("deflator").items()) p.deflator[std::stoi(year)] = d.get<double>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("utility: ") + e.what());
    }
    p.validate();
    return p;
}

Json to_json(const UtilityParams& p) {
    Json defl = Json::object();
    for (const auto& [y, d] : p.deflator) defl[std::to_string(y)] = d;
    return Json{{"kappa",
                 {{"work", {{"male", p.kappa_work[0]}, {"female", p.kappa_work[1]}}},
                  {"unemployed", {{"male", p.kappa_unemp[0]}, {"female", p.kappa_unemp[1]}}},
                  {"unemployed_age_cuts", p.unemp_age_cuts},
                  {"home_care", p.kappa_home_care},
                  {"under3_child", p.kappa_under3},
                  {"student", p.kappa_student},
                  {"retired", p.kappa_retired},
                  {"sick_leave", p.kappa_sick}}},
                {"s_age_offset", p.s_age_offset},
                {"s_ret_offset", p.s_ret_offset},
                {"q1", p.q1},
                {"q2", p.q2},
                {"gamma", p.gamma},
                {"dt", p.dt},
                {"deflator", defl}};
}

UtilityParams load_utility(const std::filesystem::path& path) {
    try {
        return utility_from_json(load_json_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

double kappa(const AgentState& a, bool child_under3, const UtilityParams& p) {
    const auto g = static_cast<std::size_t>(index_of(a.gender));
    switch (a.state) {
        case S::FullTime:
        case S::PartTime:
        case S::RetiredPartTime:
        case S::RetiredFullTime:
            return p.kappa_work[g][static_cast<std::size_t>(std::clamp(a.hours / 8 - 1, 0, 5))];
        case S::EarningsRelatedUnemployed:
        case S::ExtendedUnemployed:
        case S::LaborMarketSupport: {
            double k = 0.0;
            if (!a.pink_slip) {
                const int band = a.age < p.unemp_age_cuts[0] ? 0 : (a.age < p.unemp_age_cuts[1] ? 1 : 2);
                k = p.kappa_unemp[g][static_cast<std::size_t>(band)];
            }
            return k + (child_under3 ? p.kappa_under3[g] : 0.0);
        }
        case S::ChildHomeCare:
            return p.kappa_home_care[g];
        case S::Student:
            return p.kappa_student[g];
        case S::Retired:
            return p.kappa_retired[g];
        case S::SickLeave:
            return p.kappa_sick[g];
        case S::Dead:
            return 0.0;
        default:
            return child_under3 ? p.kappa_under3[g] : 0.0;
    }
}

double mu_term(double age, Gender g, int hours, double r_age, const UtilityParams& p) {
    const auto gi = static_cast<std::size_t>(index_of(g));
    const double s_age = r_age - p.s_age_offset[gi];
    const double s_ret = r_age + p.s_ret_offset[gi];
    const double h = hours / 40.0;
    return p.q1[gi] * h * std::max(0.0, std::min(age, r_age) - s_age) +
           p.q2[gi] * h * std::max(0.0, std::min(age, s_ret) - r_age);
}

double utility(const AgentState& a, double consumption, bool child_under3, double r_age, double deflator,
               const UtilityParams& p) {
    if (!a.alive()) return 0.0;
    if (!(consumption > 0.0)) throw ContractViolation("utility: non-positive consumption for a living agent");
    return std::log(consumption / deflator) + kappa(a, child_under3, p) - mu_term(a.age, a.gender, a.hours, r_age, p);
}

}  // namespace lcm::env
