#include "lcm/env/features.hpp"

#include <algorithm>
#include <cmath>

#include "lcm/common/errors.hpp"

namespace lcm::env {

namespace {

constexpr double kWageScale = 1.0e5;     // €/yr
constexpr double kMonthlyScale = 5.0e3;  // €/mo
constexpr double kClockScale = 40.0;     // quarters

float clock(int q) { return static_cast<float>(std::min(q, 4 * static_cast<int>(kClockScale)) / (4.0 * kClockScale)); }
float age01(double a) { return static_cast<float>((a - kStartAge) / (kDecisionEndAge - kStartAge)); }

struct Writer {
    std::span<float> out;
    std::size_t i = 0;
    void put(double v) { out[i++] = static_cast<float>(v); }
    void one_hot(int k, int n) {
        for (int j = 0; j < n; ++j) put(j == k ? 1.0 : 0.0);
    }
};

}  // namespace

void encode_features(const HouseholdState& hh, int who, const Model& m, std::span<float> out) {
    if (out.size() != static_cast<std::size_t>(kFeatureCount)) throw ContractViolation("encode_features: wrong buffer size");
    const auto& a = hh.agents[static_cast<std::size_t>(who)];
    const auto& b = hh.agents[static_cast<std::size_t>(1 - who)];
    const double min_ret = m.min_retirement_age();
    Writer w{out};

    w.one_hot(index_of(a.state), kEmploymentStateCount);
    w.put(a.hours / 48.0);
    w.put(age01(a.age));
    w.put(a.age >= min_ret ? 1.0 : 0.0);
    w.put(a.age >= m.rules.pension.partial_early_min_age ? 1.0 : 0.0);
    w.put(std::clamp((a.age - min_ret) / 10.0, -1.0, 1.0));
    w.put(index_of(a.gender));
    w.one_hot(a.group, 3);
    w.put(a.potential_wage / kWageScale);
    w.put(a.paid_wage / kWageScale);
    w.put(a.previous_wage / kWageScale);
    w.put(a.wage_reduction);
    w.put(a.wage_basis / kMonthlyScale);
    w.put(a.pink_slip ? 1.0 : 0.0);
    w.put(a.career_years / 50.0);
    w.put(a.time_in_state / 10.0);
    w.put(a.early_pension_share);
    w.put(a.pension_accrued / kMonthlyScale);
    w.put(a.pension_paid / kMonthlyScale);
    w.put(a.employment_condition ? 1.0 : 0.0);
    w.put(a.fund_member ? 1.0 : 0.0);
    w.put(a.er_days_left / 500.0);
    w.put(a.er_days_used / 500.0);
    w.put(a.unemp_wage_basis / kMonthlyScale);
    w.put(a.unemp_wage / kWageScale);
    w.put(clock(a.spell_left));
    w.put(clock(a.until_disability));
    w.put(clock(a.until_outsider));
    w.put(clock(a.life_left));

    w.one_hot(index_of(b.state), kEmploymentStateCount);
    w.put(b.alive() ? 1.0 : 0.0);
    w.put(b.hours / 48.0);
    w.put(b.paid_wage / kWageScale);
    w.put(b.potential_wage / kWageScale);
    w.put(b.pension_paid / kMonthlyScale);
    w.put(clock(b.life_left));

    w.put(hh.partnered ? 1.0 : 0.0);
    w.put(hh.children_under3() / 3.0);
    w.put(hh.children_under7() / 3.0);
    w.put(hh.children_under18() / 3.0);
    w.put(clock(hh.until_birth));
    w.put(clock(hh.until_marriage));
    w.put(clock(hh.until_divorce));
    w.put(static_cast<double>(hh.quarter) / (4.0 * (kDecisionEndAge - kStartAge)));
}

std::array<float, kFeatureCount> features(const HouseholdState& hh, int who, const Model& m) {
    std::array<float, kFeatureCount> f{};
    encode_features(hh, who, m, f);
    return f;
}

std::vector<std::string> feature_names() {
    std::vector<std::string> n;
    for (int s = 0; s < kEmploymentStateCount; ++s) n.push_back("own.state." + std::string(short_name(static_cast<EmploymentState>(s))));
    for (const char* k : {"hours", "age", "past_min_ret", "past_partial_age", "years_from_min_ret", "female", "group_low",
                          "group_mid", "group_high", "potential_wage", "paid_wage", "previous_wage", "wage_reduction",
                          "wage_basis", "pink_slip", "career", "time_in_state", "early_pension_share",
                          "pension_accrued", "pension_paid", "employment_condition", "fund_member", "er_days_left",
                          "er_days_used", "unemp_wage_basis", "unemp_wage", "spell_left", "until_disability",
                          "until_outsider", "life_left"}) {
        n.push_back(std::string("own.") + k);
    }
    for (int s = 0; s < kEmploymentStateCount; ++s) n.push_back("partner.state." + std::string(short_name(static_cast<EmploymentState>(s))));
    for (const char* k : {"alive", "hours", "paid_wage", "potential_wage", "pension_paid", "life_left"}) n.push_back(std::string("partner.") + k);
    for (const char* k : {"partnered", "children_under3", "children_under7", "children_under18", "until_birth",
                          "until_marriage", "until_divorce", "time"}) {
        n.push_back(std::string("household.") + k);
    }
    return n;
}

}  // namespace lcm::env
