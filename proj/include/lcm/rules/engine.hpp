#pragma once

#include <span>

#include "lcm/rules/household.hpp"
#include "lcm/rules/ruleset.hpp"

namespace lcm::rules {

struct TaxBreakdown {
    double state = 0.0;
    double municipal = 0.0;
    double yle = 0.0;
    double pension = 0.0;
    double unemployment = 0.0;
    double health_medical = 0.0;
    double health_daily = 0.0;
    double employer_pension = 0.0;
    double employer_unemployment = 0.0;
    double employer_health = 0.0;
    double employer_accident = 0.0;

    double taxes() const { return state + municipal + yle; }
    double contributions() const { return pension + unemployment + health_medical + health_daily; }
    double employer() const {
        return employer_pension + employer_unemployment + employer_health + employer_accident;
    }
};

// Annual amounts. Wage-based contributions apply to `wage_yr` only; taxes and
// the medical-care contribution apply to wages plus taxable benefits.
TaxBreakdown taxes_and_contributions(double wage_yr, double taxable_benefits_yr, const RuleSet& rules);
inline TaxBreakdown taxes_and_contributions(double gross_yr, const RuleSet& rules) {
    return taxes_and_contributions(gross_yr, 0.0, rules);
}

double state_income_tax(double taxable_yr, const RuleSet& rules);

// Multiplier applied to the initial earnings-related level after `days_used` benefit days.
double grading_multiplier(int days_used, const RuleSet& rules);

// Earnings-related daily level before grading.
double earnings_related_daily(double basis_mo, const RuleSet& rules);

// €/day. Earnings-related (graded) for fund members with days left, otherwise basic.
double unemployment_benefit(double basis_mo, int days_used, bool fund_member, int max_days,
                            const RuleSet& rules);
inline double unemployment_benefit(double basis_mo, int days_used, bool fund_member, const RuleSet& rules) {
    return unemployment_benefit(basis_mo, days_used, fund_member, rules.er.max_days_standard, rules);
}

// Basic allowance / labour market support per month, reduced for wage income above the disregard.
double adjusted_flat_benefit_mo(double daily, double wage_mo, const RuleSet& rules);

struct PensionAmounts {
    double er = 0.0;
    double basic = 0.0;
    double guarantee = 0.0;
    double total() const { return er + basic + guarantee; }
};

PensionAmounts pension_benefit(double accrued_er_mo, const RuleSet& rules);

// Monthly income measure for means tests: wages plus taxable benefits of living adults.
double household_income_mo(const HouseholdSnapshot& hh, const Flows& household_monthly);

// €/mo, given the means-tested monthly income.
double housing_benefit(const HouseholdSnapshot& hh, double income_mo, const RuleSet& rules);
double housing_benefit(const HouseholdSnapshot& hh, const RuleSet& rules);

double social_assistance_norm(const HouseholdSnapshot& hh, const RuleSet& rules);

// €/mo. `other_net_mo` is net income of the unit excluding the adults' gross wages.
double social_assistance(const HouseholdSnapshot& hh, double other_net_mo, const RuleSet& rules);

CashFlows net_income(const HouseholdSnapshot& hh, const RuleSet& rules);

struct EmtrResult {
    double total = 0.0;
    double taxes = 0.0;
    double contributions = 0.0;
    std::array<double, kBenefitCount> benefits{};   // withdrawal share per benefit
    std::array<double, kTaxCount> tax_parts{};
    std::array<double, kContributionCount> contribution_parts{};

    double component_sum() const;
};

// 1 - d(net)/d(wage) for a wage increase of `delta_mo` €/mo to adult `who`.
EmtrResult emtr(const HouseholdSnapshot& hh, const RuleSet& rules, double delta_mo = 100.0, int who = 0);

// 1 - (net_employed - net_unemployed) / (gross wage difference). Throws when the difference is not positive.
double ptr(const HouseholdSnapshot& employed, const HouseholdSnapshot& unemployed, const RuleSet& rules);

struct EmtrScanRow {
    double wage_mo = 0.0;
    double net_mo = 0.0;  // household net income at this wage
    EmtrResult emtr;
};
// EMTR of adult `who` across monthly wages; the template's state and other fields are kept.
std::vector<EmtrScanRow> emtr_scan(const HouseholdSnapshot& tmpl, const RuleSet& rules,
                                   std::span<const double> wages_mo, double delta_mo = 100.0, int who = 0);

// Batch evaluation; the OpenMP version must match the serial reference exactly.
void net_income_batch(std::span<const HouseholdSnapshot> in, std::span<CashFlows> out, const RuleSet& rules);
void net_income_batch_serial(std::span<const HouseholdSnapshot> in, std::span<CashFlows> out,
                             const RuleSet& rules);

}  // namespace lcm::rules
