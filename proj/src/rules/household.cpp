#include "lcm/rules/household.hpp"

#include "lcm/common/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace lcm::rules {

std::string_view to_string(Benefit b) {
    switch (b) {
        case Benefit::UnemploymentEarningsRelated: return "ub_earnings_related";
        case Benefit::UnemploymentBasic: return "ub_basic";
        case Benefit::LaborMarketSupport: return "labor_market_support";
        case Benefit::EarningsPension: return "earnings_pension";
        case Benefit::NationalPension: return "national_pension";
        case Benefit::GuaranteePension: return "guarantee_pension";
        case Benefit::SurvivorPension: return "survivor_pension";
        case Benefit::SicknessAllowance: return "sickness_allowance";
        case Benefit::ParentalAllowance: return "parental_allowance";
        case Benefit::HomeCareAllowance: return "home_care_allowance";
        case Benefit::StudentAllowance: return "student_allowance";
        case Benefit::ChildBenefit: return "child_benefit";
        case Benefit::ChildMaintenance: return "child_maintenance";
        case Benefit::HousingBenefit: return "housing_benefit";
        case Benefit::SocialAssistance: return "social_assistance";
    }
    return "?";
}

std::string_view to_string(Tax t) {
    switch (t) {
        case Tax::StateIncome: return "state_income_tax";
        case Tax::Municipal: return "municipal_tax";
        case Tax::Yle: return "yle_tax";
        case Tax::DaycareFee: return "daycare_fee";
    }
    return "?";
}

std::string_view to_string(Contribution c) {
    switch (c) {
        case Contribution::Pension: return "pension_contribution";
        case Contribution::Unemployment: return "unemployment_contribution";
        case Contribution::HealthMedical: return "health_medical_contribution";
        case Contribution::HealthDaily: return "health_daily_contribution";
    }
    return "?";
}

std::string_view to_string(EmployerContribution c) {
    switch (c) {
        case EmployerContribution::Pension: return "employer_pension";
        case EmployerContribution::Unemployment: return "employer_unemployment";
        case EmployerContribution::Health: return "employer_health";
        case EmployerContribution::Accident: return "employer_accident";
    }
    return "?";
}

int HouseholdSnapshot::living_adults() const {
    int n = 0;
    for (int i = 0; i < n_adults; ++i) {
        if (adults[static_cast<std::size_t>(i)].state != EmploymentState::Dead) ++n;
    }
    return n;
}

bool HouseholdSnapshot::valid() const {
    if (n_adults < 1 || n_adults > 2) return false;
    if (n_adults == 2 && !partnered) return false;
    if (n_adults == 1 && partnered) return false;
    if (children_under3 < 0 || children_under3 > children_under7 || children_under7 > children_under18) {
        return false;
    }
    if (rent_mo < 0.0) return false;
    for (int i = 0; i < n_adults; ++i) {
        const auto& a = adults[static_cast<std::size_t>(i)];
        if (!(a.wage_q >= 0.0) || a.benefit_days_used < 0 || a.benefit_basis_mo < 0.0 ||
            a.accrued_pension_mo < 0.0 || a.pension_paid_mo < 0.0) {
            return false;
        }
    }
    return true;
}

double Flows::total_benefits() const { return std::accumulate(benefits.begin(), benefits.end(), 0.0); }
double Flows::total_taxes() const { return std::accumulate(taxes.begin(), taxes.end(), 0.0); }
double Flows::total_contributions() const {
    return std::accumulate(contributions.begin(), contributions.end(), 0.0);
}
double Flows::total_employer() const { return std::accumulate(employer.begin(), employer.end(), 0.0); }

void Flows::scale(double k) {
    gross *= k;
    for (auto& v : benefits) v *= k;
    for (auto& v : taxes) v *= k;
    for (auto& v : contributions) v *= k;
    for (auto& v : employer) v *= k;
    net *= k;
}

Flows& Flows::operator+=(const Flows& o) {
    gross += o.gross;
    for (int i = 0; i < kBenefitCount; ++i) benefits[i] += o.benefits[i];
    for (int i = 0; i < kTaxCount; ++i) taxes[i] += o.taxes[i];
    for (int i = 0; i < kContributionCount; ++i) contributions[i] += o.contributions[i];
    for (int i = 0; i < kEmployerContributionCount; ++i) employer[i] += o.employer[i];
    net += o.net;
    return *this;
}

namespace {

void flatten_into(std::vector<std::pair<std::string, double>>& out, const std::string& prefix, const Flows& f) {
    out.emplace_back(prefix + "gross", f.gross);
    for (int i = 0; i < kBenefitCount; ++i) {
        out.emplace_back(prefix + std::string(to_string(static_cast<Benefit>(i))), f.benefits[i]);
    }
    for (int i = 0; i < kTaxCount; ++i) {
        out.emplace_back(prefix + std::string(to_string(static_cast<Tax>(i))), f.taxes[i]);
    }
    for (int i = 0; i < kContributionCount; ++i) {
        out.emplace_back(prefix + std::string(to_string(static_cast<Contribution>(i))), f.contributions[i]);
    }
    for (int i = 0; i < kEmployerContributionCount; ++i) {
        out.emplace_back(prefix + std::string(to_string(static_cast<EmployerContribution>(i))), f.employer[i]);
    }
    out.emplace_back(prefix + "net", f.net);
}

}  // namespace

std::vector<std::pair<std::string, double>> flatten(const CashFlows& cf) {
    std::vector<std::pair<std::string, double>> out;
    flatten_into(out, "adult0.", cf.adult[0]);
    flatten_into(out, "adult1.", cf.adult[1]);
    flatten_into(out, "household.", cf.household);
    out.emplace_back("vat", cf.vat);
    out.emplace_back("consumption", cf.consumption);
    return out;
}

namespace {

template <typename T>
void read(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const Json& j, std::initializer_list<const char*> keys, const char* ctx) {
    if (!j.is_object()) throw ConfigError(std::string(ctx) + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
            throw ConfigError(std::string(ctx) + ": unknown key '" + k + "'");
        }
    }
}

AdultSnapshot adult_from_json(const Json& j) {
    check_keys(j,
               {"state", "gender", "age", "wage_q", "benefit_basis_mo", "accrued_pension_mo", "pension_paid_mo",
                "benefit_days_used", "max_benefit_days", "fund_member"},
               "household template adult");
    AdultSnapshot a;
    if (j.contains("state")) {
        const auto s = parse_employment_state(j.at("state").get<std::string>());
        if (!s) throw ConfigError("household template: unknown state '" + j.at("state").get<std::string>() + "'");
        a.state = *s;
    }
    if (j.contains("gender")) {
        const auto g = j.at("gender").get<std::string>();
        if (g != "male" && g != "female") throw ConfigError("household template: bad gender '" + g + "'");
        a.gender = g == "male" ? Gender::Male : Gender::Female;
    }
    read(j, "age", a.age);
    read(j, "wage_q", a.wage_q);
    read(j, "benefit_basis_mo", a.benefit_basis_mo);
    read(j, "accrued_pension_mo", a.accrued_pension_mo);
    read(j, "pension_paid_mo", a.pension_paid_mo);
    read(j, "benefit_days_used", a.benefit_days_used);
    read(j, "max_benefit_days", a.max_benefit_days);
    read(j, "fund_member", a.fund_member);
    return a;
}

Json adult_to_json(const AdultSnapshot& a) {
    return {{"state", std::string(to_string(a.state))},
            {"gender", a.gender == Gender::Male ? "male" : "female"},
            {"age", a.age},
            {"wage_q", a.wage_q},
            {"benefit_basis_mo", a.benefit_basis_mo},
            {"accrued_pension_mo", a.accrued_pension_mo},
            {"pension_paid_mo", a.pension_paid_mo},
            {"benefit_days_used", a.benefit_days_used},
            {"max_benefit_days", a.max_benefit_days},
            {"fund_member", a.fund_member}};
}

}  // namespace

HouseholdSnapshot snapshot_from_json(const Json& doc) {
    check_keys(doc, {"adults", "partnered", "children_under3", "children_under7", "children_under18", "rent_mo"},
               "household template");
    HouseholdSnapshot hh;
    try {
        if (!doc.contains("adults") || !doc["adults"].is_array() || doc["adults"].empty() || doc["adults"].size() > 2) {
            throw ConfigError("household template: 'adults' must list 1 or 2 adults");
        }
        hh.n_adults = static_cast<int>(doc["adults"].size());
        for (int i = 0; i < hh.n_adults; ++i) hh.adults[static_cast<std::size_t>(i)] = adult_from_json(doc["adults"][static_cast<std::size_t>(i)]);
        hh.partnered = hh.n_adults == 2;
        read(doc, "partnered", hh.partnered);
        read(doc, "children_under3", hh.children_under3);
        read(doc, "children_under7", hh.children_under7);
        read(doc, "children_under18", hh.children_under18);
        read(doc, "rent_mo", hh.rent_mo);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("household template: ") + e.what());
    }
    if (!hh.valid()) throw ConfigError("household template: inconsistent household");
    return hh;
}

Json to_json(const HouseholdSnapshot& hh) {
    Json adults = Json::array();
    for (int i = 0; i < hh.n_adults; ++i) adults.push_back(adult_to_json(hh.adults[static_cast<std::size_t>(i)]));
    return {{"adults", adults},
            {"partnered", hh.partnered},
            {"children_under3", hh.children_under3},
            {"children_under7", hh.children_under7},
            {"children_under18", hh.children_under18},
            {"rent_mo", hh.rent_mo}};
}

}  // namespace lcm::rules
