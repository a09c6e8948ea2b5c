#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "lcm/common/io.hpp"

namespace lcm::rules {

// 5 benefit days per week.
inline constexpr int kBenefitDaysPerQuarter = 65;
inline constexpr double kBenefitDaysPerMonth = kBenefitDaysPerQuarter / 3.0;

struct TaxBracket {
    double lower = 0.0;  // €/yr taxable income
    double rate = 0.0;   // marginal rate above `lower`
};

struct YleTax {
    double rate = 0.0;
    double threshold = 0.0;  // €/yr
    double cap = 0.0;        // €/yr
};

struct EmployeeContributionRates {
    double pension = 0.0;
    double unemployment = 0.0;
    double health_medical = 0.0;  // levied on all taxable income
    double health_daily = 0.0;    // levied on wages
};

struct EmployerContributionRates {
    double pension = 0.0;
    double unemployment = 0.0;
    double health = 0.0;
    double accident = 0.0;
};

struct GradingStep {
    int day_threshold = 0;  // applies once benefit days used >= threshold
    double multiplier = 1.0;
};

struct ErBenefitRules {
    // Daily ER level = basic + base_rate*(w - basic) up to breakpoint, upper_rate above,
    // where w is the daily wage basis after wage_deduction.
    double base_rate = 0.45;
    double upper_rate = 0.20;
    double breakpoint_mo = 3534.95;
    double wage_deduction = 0.0474;
    int max_days_short = 300;
    int max_days_standard = 400;
    int max_days_senior = 500;
    double standard_career_years = 3.0;
    int senior_age = 58;
    double senior_career_years = 5.0;
    std::optional<std::vector<GradingStep>> grading;
    double employment_condition_months = 6.0;
    int employment_condition_window_quarters = 9;
    int employment_condition_min_hours = 18;
    bool extended_benefit = true;
    int extended_min_age = 61;
    double extended_career_years = 5.0;
    // Adjusted basic benefit for wage earners (earnings disregard in UB).
    double earnings_disregard_mo = 300.0;
    double adjustment_taper = 0.5;
};

struct PensionRules {
    double accrual_rate = 0.015;                // fraction of annual wage per year
    double unemployment_accrual_share = 0.75;   // share of ER basis accruing
    double life_expectancy_coefficient = 0.95;
    double basic_pension_full = 763.5;          // €/mo
    double basic_taper = 0.5;
    double basic_cutoff = 1527.0;               // €/mo
    double guarantee_level = 976.59;            // €/mo
    double min_retirement_age = 64.0;           // years
    double insurance_end_age = 68.0;            // years
    double partial_early_min_age = 61.0;
    std::vector<double> partial_early_shares{0.25, 0.50};
    double partial_early_reduction_per_month = 0.004;
    double late_increase_per_month = 0.004;
    double survivor_fraction = 0.5;
};

struct HousingSchedule {
    double coverage = 0.8;
    double base_deductible_mo = 0.0;
    double taper = 0.42;
    double income_threshold_mo = 600.0;
    double threshold_per_person_mo = 100.0;
    std::vector<double> max_rent_by_size;  // index = household size - 1
};

struct HousingBenefitRules {
    HousingSchedule general;
    HousingSchedule retiree;
};

struct SocialAssistanceRules {
    double norm_single = 555.0;        // €/mo
    double norm_couple_adult = 471.75;  // €/mo per adult
    double norm_child = 380.0;          // €/mo
    double earnings_disregard = 150.0;  // €/mo of wage
};

struct DaycareFeeRules {
    double rate = 0.107;
    double income_threshold_mo = 3874.0;
    double cap_per_child_mo = 295.0;
};

struct RuleSet {
    int year = 2023;
    std::vector<TaxBracket> tax_brackets;  // state income tax
    double municipal_rate = 0.0;
    double municipal_allowance = 0.0;  // €/yr deducted before municipal tax
    YleTax yle;
    double vat_rate = 0.0;
    EmployeeContributionRates employee;
    EmployerContributionRates employer;
    ErBenefitRules er;
    double basic_ub_daily = 37.21;
    PensionRules pension;
    HousingBenefitRules housing;
    SocialAssistanceRules social_assistance;
    double child_benefit_mo = 100.0;               // per child under 18
    double single_parent_supplement_mo = 73.3;     // per child, single parent
    double child_maintenance_mo = 183.0;           // per child, single parent
    double home_care_allowance_mo = 377.68;
    double student_allowance_mo = 279.38;
    double sickness_replacement = 0.70;
    double sickness_min_daily = 31.99;
    double parental_replacement = 0.70;
    double parental_min_daily = 31.99;
    DaycareFeeRules daycare;
    std::vector<double> rent_table;  // €/mo, index = household size - 1

    double rent_for(int household_size) const;

    // Throws ConfigError on any invariant violation.
    void validate() const;
};

Json to_json(const RuleSet& rules);
RuleSet ruleset_from_json(const Json& doc);
RuleSet load_ruleset(const std::filesystem::path& path);

// Load the year file `rules_<year>.json` from a parameter directory.
RuleSet load_ruleset_for_year(const std::filesystem::path& dir, int year);

}  // namespace lcm::rules
