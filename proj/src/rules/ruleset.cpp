#include "lcm/rules/ruleset.hpp"

#include <algorithm>
#include <string>

#include "lcm/common/errors.hpp"

namespace lcm::rules {

namespace {

template <typename T>
T get(const Json& obj, const char* key, const std::string& ctx) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(ctx + "." + key + ": missing");
    try {
        return it->get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(ctx + "." + key + ": " + e.what());
    }
}

const Json& section(const Json& obj, const char* key, const std::string& ctx) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_object()) throw ConfigError(ctx + "." + key + ": missing section");
    return *it;
}

void check_rate(double v, const std::string& name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("rate out of [0,1]: " + name);
}

void check_nonneg(double v, const std::string& name) {
    if (!(v >= 0.0)) throw ConfigError("negative value: " + name);
}

Json schedule_to_json(const HousingSchedule& s) {
    return Json{{"coverage", s.coverage},
                {"base_deductible_mo", s.base_deductible_mo},
                {"taper", s.taper},
                {"income_threshold_mo", s.income_threshold_mo},
                {"threshold_per_person_mo", s.threshold_per_person_mo},
                {"max_rent_by_size", s.max_rent_by_size}};
}

HousingSchedule schedule_from_json(const Json& j, const std::string& ctx) {
    HousingSchedule s;
    s.coverage = get<double>(j, "coverage", ctx);
    s.base_deductible_mo = get<double>(j, "base_deductible_mo", ctx);
    s.taper = get<double>(j, "taper", ctx);
    s.income_threshold_mo = get<double>(j, "income_threshold_mo", ctx);
    s.threshold_per_person_mo = get<double>(j, "threshold_per_person_mo", ctx);
    s.max_rent_by_size = get<std::vector<double>>(j, "max_rent_by_size", ctx);
    return s;
}

void validate_schedule(const HousingSchedule& s, const std::string& name) {
    check_rate(s.coverage, name + ".coverage");
    check_rate(s.taper, name + ".taper");
    check_nonneg(s.base_deductible_mo, name + ".base_deductible_mo");
    check_nonneg(s.income_threshold_mo, name + ".income_threshold_mo");
    check_nonneg(s.threshold_per_person_mo, name + ".threshold_per_person_mo");
    if (s.max_rent_by_size.empty()) throw ConfigError(name + ".max_rent_by_size: empty");
    for (double r : s.max_rent_by_size) check_nonneg(r, name + ".max_rent_by_size");
}

}  // namespace

double RuleSet::rent_for(int household_size) const {
    if (rent_table.empty()) return 0.0;
    const int idx = std::clamp(household_size, 1, static_cast<int>(rent_table.size())) - 1;
    return rent_table[static_cast<std::size_t>(idx)];
}

void RuleSet::validate() const {
    if (tax_brackets.empty()) throw ConfigError("tax_brackets: empty");
    for (std::size_t i = 0; i < tax_brackets.size(); ++i) {
        check_rate(tax_brackets[i].rate, "tax_brackets.rate");
        check_nonneg(tax_brackets[i].lower, "tax_brackets.lower");
        if (i > 0 && !(tax_brackets[i].lower > tax_brackets[i - 1].lower)) {
            throw ConfigError("tax_brackets: lower bounds must be strictly increasing");
        }
    }
    check_rate(municipal_rate, "municipal_rate");
    check_nonneg(municipal_allowance, "municipal_allowance");
    check_rate(yle.rate, "yle.rate");
    check_nonneg(yle.threshold, "yle.threshold");
    check_nonneg(yle.cap, "yle.cap");
    check_rate(vat_rate, "vat_rate");
    check_rate(employee.pension, "employee.pension");
    check_rate(employee.unemployment, "employee.unemployment");
    check_rate(employee.health_medical, "employee.health_medical");
    check_rate(employee.health_daily, "employee.health_daily");
    check_rate(employer.pension, "employer.pension");
    check_rate(employer.unemployment, "employer.unemployment");
    check_rate(employer.health, "employer.health");
    check_rate(employer.accident, "employer.accident");

    check_rate(er.base_rate, "er.base_rate");
    check_rate(er.upper_rate, "er.upper_rate");
    check_rate(er.wage_deduction, "er.wage_deduction");
    check_rate(er.adjustment_taper, "er.adjustment_taper");
    check_nonneg(er.breakpoint_mo, "er.breakpoint_mo");
    check_nonneg(er.earnings_disregard_mo, "er.earnings_disregard_mo");
    for (int d : {er.max_days_short, er.max_days_standard, er.max_days_senior}) {
        if (d != 300 && d != 400 && d != 500) throw ConfigError("er.max_days: must be 300, 400 or 500");
    }
    if (er.grading) {
        const auto& g = *er.grading;
        if (g.empty()) throw ConfigError("er.grading: empty list (use null to disable)");
        for (std::size_t i = 0; i < g.size(); ++i) {
            check_rate(g[i].multiplier, "er.grading.multiplier");
            if (g[i].day_threshold < 0) throw ConfigError("er.grading: negative day threshold");
            if (i > 0) {
                if (g[i].day_threshold <= g[i - 1].day_threshold) {
                    throw ConfigError("er.grading: day thresholds must be strictly increasing");
                }
                if (g[i].multiplier > g[i - 1].multiplier) {
                    throw ConfigError("er.grading: multipliers must be non-increasing");
                }
            }
        }
    }
    if (!(er.employment_condition_months >= 0.0)) throw ConfigError("er.employment_condition_months");
    if (er.employment_condition_window_quarters < 1) {
        throw ConfigError("er.employment_condition_window_quarters must be >= 1");
    }
    check_nonneg(basic_ub_daily, "basic_ub_daily");

    check_rate(pension.accrual_rate, "pension.accrual_rate");
    check_rate(pension.unemployment_accrual_share, "pension.unemployment_accrual_share");
    check_rate(pension.life_expectancy_coefficient, "pension.life_expectancy_coefficient");
    check_rate(pension.basic_taper, "pension.basic_taper");
    check_rate(pension.partial_early_reduction_per_month, "pension.partial_early_reduction_per_month");
    check_rate(pension.late_increase_per_month, "pension.late_increase_per_month");
    check_rate(pension.survivor_fraction, "pension.survivor_fraction");
    check_nonneg(pension.basic_pension_full, "pension.basic_pension_full");
    check_nonneg(pension.guarantee_level, "pension.guarantee_level");
    if (!(pension.basic_cutoff > 0.0)) throw ConfigError("pension.basic_cutoff must be > 0");
    for (double s : pension.partial_early_shares) check_rate(s, "pension.partial_early_shares");

    validate_schedule(housing.general, "housing.general");
    validate_schedule(housing.retiree, "housing.retiree");
    check_nonneg(social_assistance.norm_single, "social_assistance.norm_single");
    check_nonneg(social_assistance.norm_couple_adult, "social_assistance.norm_couple_adult");
    check_nonneg(social_assistance.norm_child, "social_assistance.norm_child");
    check_nonneg(social_assistance.earnings_disregard, "social_assistance.earnings_disregard");
    check_rate(sickness_replacement, "sickness_replacement");
    check_rate(parental_replacement, "parental_replacement");
    check_rate(daycare.rate, "daycare.rate");
    check_nonneg(daycare.cap_per_child_mo, "daycare.cap_per_child_mo");
    if (rent_table.empty()) throw ConfigError("rent_table: empty");
    for (double r : rent_table) {
        if (!(r > 0.0)) throw ConfigError("rent_table: rents must be positive");
    }
}

Json to_json(const RuleSet& r) {
    Json brackets = Json::array();
    for (const auto& b : r.tax_brackets) brackets.push_back(Json::array({b.lower, b.rate}));
    Json grading = nullptr;
    if (r.er.grading) {
        grading = Json::array();
        for (const auto& g : *r.er.grading) grading.push_back(Json::array({g.day_threshold, g.multiplier}));
    }
    Json j;
    j["year"] = r.year;
    j["tax_brackets"] = brackets;
    j["municipal_rate"] = r.municipal_rate;
    j["municipal_allowance"] = r.municipal_allowance;
    j["yle_tax"] = {{"rate", r.yle.rate}, {"threshold", r.yle.threshold}, {"cap", r.yle.cap}};
    j["vat_rate"] = r.vat_rate;
    j["employee_contrib"] = {{"pension", r.employee.pension},
                             {"unemployment", r.employee.unemployment},
                             {"health_medical", r.employee.health_medical},
                             {"health_daily", r.employee.health_daily}};
    j["employer_contrib"] = {{"pension", r.employer.pension},
                             {"unemployment", r.employer.unemployment},
                             {"health", r.employer.health},
                             {"accident", r.employer.accident}};
    j["er_benefit"] = {{"base_rate", r.er.base_rate},
                       {"upper_rate", r.er.upper_rate},
                       {"breakpoint_mo", r.er.breakpoint_mo},
                       {"wage_deduction", r.er.wage_deduction},
                       {"max_days_short", r.er.max_days_short},
                       {"max_days_standard", r.er.max_days_standard},
                       {"max_days_senior", r.er.max_days_senior},
                       {"standard_career_years", r.er.standard_career_years},
                       {"senior_age", r.er.senior_age},
                       {"senior_career_years", r.er.senior_career_years},
                       {"grading", grading},
                       {"employment_condition_months", r.er.employment_condition_months},
                       {"employment_condition_window_quarters", r.er.employment_condition_window_quarters},
                       {"employment_condition_min_hours", r.er.employment_condition_min_hours},
                       {"extended_benefit", r.er.extended_benefit},
                       {"extended_min_age", r.er.extended_min_age},
                       {"extended_career_years", r.er.extended_career_years},
                       {"earnings_disregard_mo", r.er.earnings_disregard_mo},
                       {"adjustment_taper", r.er.adjustment_taper}};
    j["basic_ub_daily"] = r.basic_ub_daily;
    j["pension"] = {{"accrual_rate", r.pension.accrual_rate},
                    {"unemployment_accrual_share", r.pension.unemployment_accrual_share},
                    {"life_expectancy_coefficient", r.pension.life_expectancy_coefficient},
                    {"basic_pension_full", r.pension.basic_pension_full},
                    {"basic_taper", r.pension.basic_taper},
                    {"basic_cutoff", r.pension.basic_cutoff},
                    {"guarantee_level", r.pension.guarantee_level},
                    {"min_retirement_age", r.pension.min_retirement_age},
                    {"insurance_end_age", r.pension.insurance_end_age},
                    {"partial_early_min_age", r.pension.partial_early_min_age},
                    {"partial_early_shares", r.pension.partial_early_shares},
                    {"partial_early_reduction_per_month", r.pension.partial_early_reduction_per_month},
                    {"late_increase_per_month", r.pension.late_increase_per_month},
                    {"survivor_fraction", r.pension.survivor_fraction}};
    j["housing_benefit"] = {{"general", schedule_to_json(r.housing.general)},
                            {"retiree", schedule_to_json(r.housing.retiree)}};
    j["social_assistance"] = {{"norm_single", r.social_assistance.norm_single},
                              {"norm_couple_adult", r.social_assistance.norm_couple_adult},
                              {"norm_child", r.social_assistance.norm_child},
                              {"earnings_disregard", r.social_assistance.earnings_disregard}};
    j["child_benefit_mo"] = r.child_benefit_mo;
    j["single_parent_supplement_mo"] = r.single_parent_supplement_mo;
    j["child_maintenance_mo"] = r.child_maintenance_mo;
    j["home_care_allowance_mo"] = r.home_care_allowance_mo;
    j["student_allowance_mo"] = r.student_allowance_mo;
    j["sickness_replacement"] = r.sickness_replacement;
    j["sickness_min_daily"] = r.sickness_min_daily;
    j["parental_replacement"] = r.parental_replacement;
    j["parental_min_daily"] = r.parental_min_daily;
    j["daycare_fee"] = {{"rate", r.daycare.rate},
                        {"income_threshold_mo", r.daycare.income_threshold_mo},
                        {"cap_per_child_mo", r.daycare.cap_per_child_mo}};
    j["rent_table"] = r.rent_table;
    return j;
}

RuleSet ruleset_from_json(const Json& doc) {
    const std::string root = "ruleset";
    if (!doc.is_object()) throw ConfigError("ruleset: document must be an object");
    RuleSet r;
    r.year = get<int>(doc, "year", root);
    for (const auto& b : get<Json>(doc, "tax_brackets", root)) {
        if (!b.is_array() || b.size() != 2) throw ConfigError("ruleset.tax_brackets: expected [lower, rate] pairs");
        r.tax_brackets.push_back({b[0].get<double>(), b[1].get<double>()});
    }
    r.municipal_rate = get<double>(doc, "municipal_rate", root);
    r.municipal_allowance = get<double>(doc, "municipal_allowance", root);
    {
        const auto& y = section(doc, "yle_tax", root);
        r.yle = {get<double>(y, "rate", "yle_tax"), get<double>(y, "threshold", "yle_tax"),
                 get<double>(y, "cap", "yle_tax")};
    }
    r.vat_rate = get<double>(doc, "vat_rate", root);
    {
        const auto& e = section(doc, "employee_contrib", root);
        const std::string c = "employee_contrib";
        r.employee = {get<double>(e, "pension", c), get<double>(e, "unemployment", c),
                      get<double>(e, "health_medical", c), get<double>(e, "health_daily", c)};
    }
    {
        const auto& e = section(doc, "employer_contrib", root);
        const std::string c = "employer_contrib";
        r.employer = {get<double>(e, "pension", c), get<double>(e, "unemployment", c),
                      get<double>(e, "health", c), get<double>(e, "accident", c)};
    }
    {
        const auto& e = section(doc, "er_benefit", root);
        const std::string c = "er_benefit";
        r.er.base_rate = get<double>(e, "base_rate", c);
        r.er.upper_rate = get<double>(e, "upper_rate", c);
        r.er.breakpoint_mo = get<double>(e, "breakpoint_mo", c);
        r.er.wage_deduction = get<double>(e, "wage_deduction", c);
        r.er.max_days_short = get<int>(e, "max_days_short", c);
        r.er.max_days_standard = get<int>(e, "max_days_standard", c);
        r.er.max_days_senior = get<int>(e, "max_days_senior", c);
        r.er.standard_career_years = get<double>(e, "standard_career_years", c);
        r.er.senior_age = get<int>(e, "senior_age", c);
        r.er.senior_career_years = get<double>(e, "senior_career_years", c);
        const auto g = e.find("grading");
        if (g == e.end()) throw ConfigError("er_benefit.grading: missing (use null to disable)");
        if (!g->is_null()) {
            std::vector<GradingStep> steps;
            for (const auto& s : *g) {
                if (!s.is_array() || s.size() != 2) {
                    throw ConfigError("er_benefit.grading: expected [day_threshold, multiplier] pairs");
                }
                steps.push_back({s[0].get<int>(), s[1].get<double>()});
            }
            r.er.grading = std::move(steps);
        }
        r.er.employment_condition_months = get<double>(e, "employment_condition_months", c);
        r.er.employment_condition_window_quarters = get<int>(e, "employment_condition_window_quarters", c);
        r.er.employment_condition_min_hours = get<int>(e, "employment_condition_min_hours", c);
        r.er.extended_benefit = get<bool>(e, "extended_benefit", c);
        r.er.extended_min_age = get<int>(e, "extended_min_age", c);
        r.er.extended_career_years = get<double>(e, "extended_career_years", c);
        r.er.earnings_disregard_mo = get<double>(e, "earnings_disregard_mo", c);
        r.er.adjustment_taper = get<double>(e, "adjustment_taper", c);
    }
    r.basic_ub_daily = get<double>(doc, "basic_ub_daily", root);
    {
        const auto& p = section(doc, "pension", root);
        const std::string c = "pension";
        r.pension.accrual_rate = get<double>(p, "accrual_rate", c);
        r.pension.unemployment_accrual_share = get<double>(p, "unemployment_accrual_share", c);
        r.pension.life_expectancy_coefficient = get<double>(p, "life_expectancy_coefficient", c);
        r.pension.basic_pension_full = get<double>(p, "basic_pension_full", c);
        r.pension.basic_taper = get<double>(p, "basic_taper", c);
        r.pension.basic_cutoff = get<double>(p, "basic_cutoff", c);
        r.pension.guarantee_level = get<double>(p, "guarantee_level", c);
        r.pension.min_retirement_age = get<double>(p, "min_retirement_age", c);
        r.pension.insurance_end_age = get<double>(p, "insurance_end_age", c);
        r.pension.partial_early_min_age = get<double>(p, "partial_early_min_age", c);
        r.pension.partial_early_shares = get<std::vector<double>>(p, "partial_early_shares", c);
        r.pension.partial_early_reduction_per_month = get<double>(p, "partial_early_reduction_per_month", c);
        r.pension.late_increase_per_month = get<double>(p, "late_increase_per_month", c);
        r.pension.survivor_fraction = get<double>(p, "survivor_fraction", c);
    }
    {
        const auto& h = section(doc, "housing_benefit", root);
        r.housing.general = schedule_from_json(section(h, "general", "housing_benefit"), "housing_benefit.general");
        r.housing.retiree = schedule_from_json(section(h, "retiree", "housing_benefit"), "housing_benefit.retiree");
    }
    {
        const auto& s = section(doc, "social_assistance", root);
        const std::string c = "social_assistance";
        r.social_assistance = {get<double>(s, "norm_single", c), get<double>(s, "norm_couple_adult", c),
                               get<double>(s, "norm_child", c), get<double>(s, "earnings_disregard", c)};
    }
    r.child_benefit_mo = get<double>(doc, "child_benefit_mo", root);
    r.single_parent_supplement_mo = get<double>(doc, "single_parent_supplement_mo", root);
    r.child_maintenance_mo = get<double>(doc, "child_maintenance_mo", root);
    r.home_care_allowance_mo = get<double>(doc, "home_care_allowance_mo", root);
    r.student_allowance_mo = get<double>(doc, "student_allowance_mo", root);
    r.sickness_replacement = get<double>(doc, "sickness_replacement", root);
    r.sickness_min_daily = get<double>(doc, "sickness_min_daily", root);
    r.parental_replacement = get<double>(doc, "parental_replacement", root);
    r.parental_min_daily = get<double>(doc, "parental_min_daily", root);
    {
        const auto& d = section(doc, "daycare_fee", root);
        const std::string c = "daycare_fee";
        r.daycare = {get<double>(d, "rate", c), get<double>(d, "income_threshold_mo", c),
                     get<double>(d, "cap_per_child_mo", c)};
    }
    r.rent_table = get<std::vector<double>>(doc, "rent_table", root);
    r.validate();
    return r;
}

RuleSet load_ruleset(const std::filesystem::path& path) {
    try {
        return ruleset_from_json(load_json_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

RuleSet load_ruleset_for_year(const std::filesystem::path& dir, int year) {
    return load_ruleset(dir / ("rules_" + std::to_string(year) + ".json"));
}

}  // namespace lcm::rules
