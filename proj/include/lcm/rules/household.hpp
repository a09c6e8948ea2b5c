#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "lcm/common/io.hpp"
#include "lcm/common/types.hpp"

namespace lcm::rules {

enum class Benefit : std::uint8_t {
    UnemploymentEarningsRelated = 0,
    UnemploymentBasic,
    LaborMarketSupport,
    EarningsPension,
    NationalPension,
    GuaranteePension,
    SurvivorPension,
    SicknessAllowance,
    ParentalAllowance,
    HomeCareAllowance,
    StudentAllowance,
    ChildBenefit,
    ChildMaintenance,
    HousingBenefit,
    SocialAssistance,
};
inline constexpr int kBenefitCount = 15;

// The day care fee is booked as a tax: it is a compulsory, income-tested payment.
enum class Tax : std::uint8_t { StateIncome = 0, Municipal, Yle, DaycareFee };
inline constexpr int kTaxCount = 4;

enum class Contribution : std::uint8_t { Pension = 0, Unemployment, HealthMedical, HealthDaily };
inline constexpr int kContributionCount = 4;

enum class EmployerContribution : std::uint8_t { Pension = 0, Unemployment, Health, Accident };
inline constexpr int kEmployerContributionCount = 4;

std::string_view to_string(Benefit b);
std::string_view to_string(Tax t);
std::string_view to_string(Contribution c);
std::string_view to_string(EmployerContribution c);

struct AdultSnapshot {
    EmploymentState state = EmploymentState::OutsideWorkforce;
    Gender gender = Gender::Male;
    double age = 30.0;
    double wage_q = 0.0;               // gross wage, €/quarter
    double benefit_basis_mo = 0.0;     // wage basis for UB / sickness / parental, €/mo
    double accrued_pension_mo = 0.0;   // accrued earnings-related pension, €/mo
    double pension_paid_mo = 0.0;      // earnings-related pension in payment, €/mo
    int benefit_days_used = 0;
    int max_benefit_days = 400;
    bool fund_member = true;
};

// One benefit unit for one quarter: a single adult or a couple, with the children
// living with them. A dead adult may be included to route the survivor's pension.
struct HouseholdSnapshot {
    std::array<AdultSnapshot, 2> adults{};
    int n_adults = 1;
    bool partnered = false;
    int children_under3 = 0;
    int children_under7 = 0;
    int children_under18 = 0;
    double rent_mo = 0.0;

    int living_adults() const;
    int size() const { return living_adults() + children_under18; }
    bool valid() const;
};

struct Flows {
    double gross = 0.0;
    std::array<double, kBenefitCount> benefits{};
    std::array<double, kTaxCount> taxes{};
    std::array<double, kContributionCount> contributions{};
    std::array<double, kEmployerContributionCount> employer{};
    double net = 0.0;

    double& operator[](Benefit b) { return benefits[static_cast<int>(b)]; }
    double operator[](Benefit b) const { return benefits[static_cast<int>(b)]; }
    double& operator[](Tax t) { return taxes[static_cast<int>(t)]; }
    double operator[](Tax t) const { return taxes[static_cast<int>(t)]; }
    double& operator[](Contribution c) { return contributions[static_cast<int>(c)]; }
    double operator[](Contribution c) const { return contributions[static_cast<int>(c)]; }

    double total_benefits() const;
    double total_taxes() const;
    double total_contributions() const;
    double total_employer() const;
    // gross + benefits - taxes - contributions, evaluated from the parts.
    double identity_net() const { return gross + total_benefits() - total_taxes() - total_contributions(); }
    void scale(double k);
    Flows& operator+=(const Flows& o);
};

// All amounts €/quarter. Household-level items (child benefit, housing benefit,
// social assistance, day care fee) appear only in `household`.
struct CashFlows {
    std::array<Flows, 2> adult{};
    Flows household;
    double vat = 0.0;
    double consumption = 0.0;
};

// Flat key/value view for CSV output.
std::vector<std::pair<std::string, double>> flatten(const CashFlows& cf);

// Household templates for scans. Missing keys keep their defaults; unknown keys are rejected.
HouseholdSnapshot snapshot_from_json(const Json& doc);
Json to_json(const HouseholdSnapshot& hh);

}  // namespace lcm::rules
