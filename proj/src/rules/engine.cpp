#include "lcm/rules/engine.hpp"

#include <algorithm>
#include <cmath>

#include "lcm/common/errors.hpp"

namespace lcm::rules {

namespace {

using S = EmploymentState;

constexpr bool is_taxable(Benefit b) {
    switch (b) {
        case Benefit::ChildBenefit:
        case Benefit::ChildMaintenance:
        case Benefit::HousingBenefit:
        case Benefit::SocialAssistance:
            return false;
        default:
            return true;
    }
}

double taxable_benefits(const Flows& f) {
    double s = 0.0;
    for (int i = 0; i < kBenefitCount; ++i) {
        if (is_taxable(static_cast<Benefit>(i))) s += f.benefits[i];
    }
    return s;
}

double daily_allowance(double basis_mo, double replacement, double min_daily) {
    return std::max(min_daily, replacement * basis_mo / kBenefitDaysPerMonth);
}

// Monthly amounts for one living adult, before household-level items.
Flows adult_flows(const AdultSnapshot& a, const AdultSnapshot* deceased_partner, const RuleSet& r) {
    Flows f;
    const double wage_mo = a.wage_q / 3.0;
    f.gross = wage_mo;

    switch (a.state) {
        case S::EarningsRelatedUnemployed: {
            const bool er = a.fund_member && a.benefit_days_used < a.max_benefit_days;
            const double daily =
                unemployment_benefit(a.benefit_basis_mo, a.benefit_days_used, a.fund_member, a.max_benefit_days, r);
            if (er) {
                f[Benefit::UnemploymentEarningsRelated] = daily * kBenefitDaysPerMonth;
            } else {
                f[Benefit::UnemploymentBasic] = adjusted_flat_benefit_mo(daily, wage_mo, r);
            }
            break;
        }
        case S::ExtendedUnemployed:
            f[Benefit::UnemploymentEarningsRelated] =
                std::max(r.basic_ub_daily, earnings_related_daily(a.benefit_basis_mo, r) *
                                               grading_multiplier(a.benefit_days_used, r)) *
                kBenefitDaysPerMonth;
            break;
        case S::LaborMarketSupport:
            f[Benefit::LaborMarketSupport] = adjusted_flat_benefit_mo(r.basic_ub_daily, wage_mo, r);
            break;
        case S::Retired:
        case S::RetiredPartTime:
        case S::RetiredFullTime:
        case S::Disabled: {
            const auto p = pension_benefit(a.pension_paid_mo, r);
            f[Benefit::EarningsPension] = p.er;
            f[Benefit::NationalPension] = p.basic;
            f[Benefit::GuaranteePension] = p.guarantee;
            break;
        }
        case S::SickLeave:
            f[Benefit::SicknessAllowance] =
                daily_allowance(a.benefit_basis_mo, r.sickness_replacement, r.sickness_min_daily) *
                kBenefitDaysPerMonth;
            break;
        case S::MothersLeave:
        case S::FathersLeave:
            f[Benefit::ParentalAllowance] =
                daily_allowance(a.benefit_basis_mo, r.parental_replacement, r.parental_min_daily) *
                kBenefitDaysPerMonth;
            break;
        case S::ChildHomeCare:
            f[Benefit::HomeCareAllowance] = r.home_care_allowance_mo;
            break;
        case S::Student:
            f[Benefit::StudentAllowance] = r.student_allowance_mo;
            break;
        case S::FullTime:
        case S::PartTime:
            // partial early old-age pension drawn while working
            f[Benefit::EarningsPension] = a.pension_paid_mo;
            break;
        case S::OutsideWorkforce:
        case S::Dead:
            break;
    }

    if (deceased_partner != nullptr) {
        f[Benefit::SurvivorPension] = r.pension.survivor_fraction * deceased_partner->accrued_pension_mo;
    }

    const TaxBreakdown t = taxes_and_contributions(12.0 * wage_mo, 12.0 * taxable_benefits(f), r);
    f[Tax::StateIncome] = t.state / 12.0;
    f[Tax::Municipal] = t.municipal / 12.0;
    f[Tax::Yle] = t.yle / 12.0;
    f[Contribution::Pension] = t.pension / 12.0;
    f[Contribution::Unemployment] = t.unemployment / 12.0;
    f[Contribution::HealthMedical] = t.health_medical / 12.0;
    f[Contribution::HealthDaily] = t.health_daily / 12.0;
    f.employer[static_cast<int>(EmployerContribution::Pension)] = t.employer_pension / 12.0;
    f.employer[static_cast<int>(EmployerContribution::Unemployment)] = t.employer_unemployment / 12.0;
    f.employer[static_cast<int>(EmployerContribution::Health)] = t.employer_health / 12.0;
    f.employer[static_cast<int>(EmployerContribution::Accident)] = t.employer_accident / 12.0;
    f.net = f.identity_net();
    return f;
}

bool child_at_home(const HouseholdSnapshot& hh) {
    for (int i = 0; i < hh.n_adults; ++i) {
        const S s = hh.adults[static_cast<std::size_t>(i)].state;
        if (s == S::ChildHomeCare || s == S::MothersLeave || s == S::FathersLeave) return true;
    }
    return false;
}

double daycare_fee_mo(const HouseholdSnapshot& hh, double income_mo, const RuleSet& r) {
    const int kids = hh.children_under7 - (child_at_home(hh) ? hh.children_under3 : 0);
    if (kids <= 0) return 0.0;
    const double per_child =
        std::min(r.daycare.cap_per_child_mo, r.daycare.rate * std::max(0.0, income_mo - r.daycare.income_threshold_mo));
    return kids * per_child;
}

}  // namespace

double state_income_tax(double taxable_yr, const RuleSet& r) {
    double tax = 0.0;
    const auto& b = r.tax_brackets;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double lo = b[i].lower;
        if (taxable_yr <= lo) break;
        const double hi = i + 1 < b.size() ? b[i + 1].lower : taxable_yr;
        tax += b[i].rate * (std::min(taxable_yr, hi) - lo);
    }
    return tax;
}

TaxBreakdown taxes_and_contributions(double wage_yr, double taxable_benefits_yr, const RuleSet& r) {
    TaxBreakdown t;
    wage_yr = std::max(0.0, wage_yr);
    taxable_benefits_yr = std::max(0.0, taxable_benefits_yr);
    const double income = wage_yr + taxable_benefits_yr;

    t.pension = r.employee.pension * wage_yr;
    t.unemployment = r.employee.unemployment * wage_yr;
    t.health_daily = r.employee.health_daily * wage_yr;
    t.health_medical = r.employee.health_medical * income;

    const double taxable = std::max(0.0, income - t.contributions());
    t.state = state_income_tax(taxable, r);
    t.municipal = r.municipal_rate * std::max(0.0, taxable - r.municipal_allowance);
    t.yle = std::min(r.yle.cap, r.yle.rate * std::max(0.0, income - r.yle.threshold));

    t.employer_pension = r.employer.pension * wage_yr;
    t.employer_unemployment = r.employer.unemployment * wage_yr;
    t.employer_health = r.employer.health * wage_yr;
    t.employer_accident = r.employer.accident * wage_yr;
    return t;
}

double grading_multiplier(int days_used, const RuleSet& r) {
    if (!r.er.grading) return 1.0;
    double m = 1.0;
    for (const auto& step : *r.er.grading) {
        if (days_used >= step.day_threshold) m = step.multiplier;
    }
    return m;
}

double earnings_related_daily(double basis_mo, const RuleSet& r) {
    const double wage_daily = std::max(0.0, basis_mo) * (1.0 - r.er.wage_deduction) / kBenefitDaysPerMonth;
    const double basic = r.basic_ub_daily;
    const double bp = r.er.breakpoint_mo / kBenefitDaysPerMonth;
    const double excess = std::max(0.0, wage_daily - basic);
    const double below = std::min(excess, std::max(0.0, bp - basic));
    const double above = std::max(0.0, wage_daily - std::max(bp, basic));
    return basic + r.er.base_rate * below + r.er.upper_rate * above;
}

double unemployment_benefit(double basis_mo, int days_used, bool fund_member, int max_days, const RuleSet& r) {
    if (!fund_member || days_used >= max_days) return r.basic_ub_daily;
    const double graded = earnings_related_daily(basis_mo, r) * grading_multiplier(days_used, r);
    return std::max(r.basic_ub_daily, graded);
}

double adjusted_flat_benefit_mo(double daily, double wage_mo, const RuleSet& r) {
    const double full = daily * kBenefitDaysPerMonth;
    const double cut = r.er.adjustment_taper * std::max(0.0, wage_mo - r.er.earnings_disregard_mo);
    return std::max(0.0, full - cut);
}

PensionAmounts pension_benefit(double accrued_er_mo, const RuleSet& r) {
    PensionAmounts p;
    p.er = std::max(0.0, accrued_er_mo);
    if (p.er < r.pension.basic_cutoff) {
        p.basic = std::max(0.0, r.pension.basic_pension_full - r.pension.basic_taper * p.er);
    }
    p.guarantee = std::max(0.0, r.pension.guarantee_level - p.er - p.basic);
    return p;
}

double household_income_mo(const HouseholdSnapshot& hh, const Flows& m) {
    (void)hh;
    return m.gross + taxable_benefits(m);
}

double housing_benefit(const HouseholdSnapshot& hh, double income_mo, const RuleSet& r) {
    if (hh.rent_mo <= 0.0) return 0.0;
    bool retiree = false;
    for (int i = 0; i < hh.n_adults; ++i) {
        if (is_pensioner(hh.adults[static_cast<std::size_t>(i)].state)) retiree = true;
    }
    const HousingSchedule& s = retiree ? r.housing.retiree : r.housing.general;
    const int size = std::max(1, hh.size());
    const auto idx = static_cast<std::size_t>(std::min<int>(size, static_cast<int>(s.max_rent_by_size.size())) - 1);
    const double eligible = std::min(hh.rent_mo, s.max_rent_by_size[idx]);
    const double threshold = s.income_threshold_mo + s.threshold_per_person_mo * (size - 1);
    const double hb =
        s.coverage * (eligible - s.base_deductible_mo) - s.taper * std::max(0.0, income_mo - threshold);
    return std::clamp(hb, 0.0, hh.rent_mo);
}

double housing_benefit(const HouseholdSnapshot& hh, const RuleSet& r) {
    double income = 0.0;
    for (int i = 0; i < hh.n_adults; ++i) income += hh.adults[static_cast<std::size_t>(i)].wage_q / 3.0;
    return housing_benefit(hh, income, r);
}

double social_assistance_norm(const HouseholdSnapshot& hh, const RuleSet& r) {
    const int adults = hh.living_adults();
    double norm = adults >= 2 ? 2.0 * r.social_assistance.norm_couple_adult : r.social_assistance.norm_single;
    if (adults == 0) norm = 0.0;
    return norm + r.social_assistance.norm_child * hh.children_under18;
}

double social_assistance(const HouseholdSnapshot& hh, double other_net_mo, const RuleSet& r) {
    if (hh.living_adults() == 0) return 0.0;
    double countable = other_net_mo;
    for (int i = 0; i < hh.n_adults; ++i) {
        const auto& a = hh.adults[static_cast<std::size_t>(i)];
        if (a.state == S::Dead) continue;
        countable += std::max(0.0, a.wage_q / 3.0 - r.social_assistance.earnings_disregard);
    }
    countable = std::max(0.0, countable);
    return std::max(0.0, social_assistance_norm(hh, r) + hh.rent_mo - countable);
}

CashFlows net_income(const HouseholdSnapshot& hh, const RuleSet& r) {
    CashFlows cf;
    Flows total;
    for (int i = 0; i < hh.n_adults; ++i) {
        const auto& a = hh.adults[static_cast<std::size_t>(i)];
        if (a.state == S::Dead) continue;
        const AdultSnapshot* deceased = nullptr;
        if (hh.partnered && hh.n_adults == 2) {
            const auto& other = hh.adults[static_cast<std::size_t>(1 - i)];
            if (other.state == S::Dead) deceased = &other;
        }
        cf.adult[static_cast<std::size_t>(i)] = adult_flows(a, deceased, r);
        total += cf.adult[static_cast<std::size_t>(i)];
    }

    const int living = hh.living_adults();
    if (living > 0) {
        total[Benefit::ChildBenefit] = r.child_benefit_mo * hh.children_under18;
        if (living == 1) {
            total[Benefit::ChildMaintenance] =
                (r.single_parent_supplement_mo + r.child_maintenance_mo) * hh.children_under18;
        }
        const double income = household_income_mo(hh, total);
        total[Tax::DaycareFee] = daycare_fee_mo(hh, income, r);
        total[Benefit::HousingBenefit] = housing_benefit(hh, income, r);
        const double before_sa = total.identity_net();
        total[Benefit::SocialAssistance] = social_assistance(hh, before_sa - total.gross, r);
    }
    total.net = total.identity_net();

    for (auto& a : cf.adult) a.scale(3.0);
    total.scale(3.0);
    cf.household = total;
    cf.vat = r.vat_rate * std::max(0.0, total.net - 3.0 * hh.rent_mo);
    cf.consumption = total.net - cf.vat;
    return cf;
}

double EmtrResult::component_sum() const {
    double s = 0.0;
    for (double v : benefits) s += v;
    for (double v : tax_parts) s += v;
    for (double v : contribution_parts) s += v;
    return s;
}

EmtrResult emtr(const HouseholdSnapshot& hh, const RuleSet& r, double delta_mo, int who) {
    if (!(delta_mo > 0.0)) throw ContractViolation("emtr: delta must be positive");
    if (who < 0 || who >= hh.n_adults) throw ContractViolation("emtr: adult index out of range");
    HouseholdSnapshot up = hh;
    up.adults[static_cast<std::size_t>(who)].wage_q += 3.0 * delta_mo;
    const Flows a = net_income(hh, r).household;
    const Flows b = net_income(up, r).household;
    const double dg = b.gross - a.gross;

    EmtrResult e;
    e.total = 1.0 - (b.net - a.net) / dg;
    for (int i = 0; i < kBenefitCount; ++i) e.benefits[i] = -(b.benefits[i] - a.benefits[i]) / dg;
    for (int i = 0; i < kTaxCount; ++i) {
        e.tax_parts[i] = (b.taxes[i] - a.taxes[i]) / dg;
        e.taxes += e.tax_parts[i];
    }
    for (int i = 0; i < kContributionCount; ++i) {
        e.contribution_parts[i] = (b.contributions[i] - a.contributions[i]) / dg;
        e.contributions += e.contribution_parts[i];
    }
    return e;
}

double ptr(const HouseholdSnapshot& employed, const HouseholdSnapshot& unemployed, const RuleSet& r) {
    const Flows e = net_income(employed, r).household;
    const Flows u = net_income(unemployed, r).household;
    const double gross = e.gross - u.gross;
    if (!(gross > 0.0)) throw ContractViolation("ptr: employed snapshot must earn more than the counterfactual");
    return 1.0 - (e.net - u.net) / gross;
}

std::vector<EmtrScanRow> emtr_scan(const HouseholdSnapshot& tmpl, const RuleSet& r, std::span<const double> wages_mo,
                                   double delta_mo, int who) {
    std::vector<EmtrScanRow> out;
    out.reserve(wages_mo.size());
    auto hh = tmpl;
    for (double w : wages_mo) {
        if (!(w >= 0.0)) throw ContractViolation("emtr_scan: wages must be >= 0");
        hh.adults[static_cast<std::size_t>(who)].wage_q = 3.0 * w;
        EmtrScanRow row;
        row.wage_mo = w;
        row.net_mo = net_income(hh, r).household.net / 3.0;
        row.emtr = emtr(hh, r, delta_mo, who);
        out.push_back(row);
    }
    return out;
}

void net_income_batch_serial(std::span<const HouseholdSnapshot> in, std::span<CashFlows> out, const RuleSet& r) {
    if (in.size() != out.size()) throw ContractViolation("net_income_batch: size mismatch");
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = net_income(in[i], r);
}

void net_income_batch(std::span<const HouseholdSnapshot> in, std::span<CashFlows> out, const RuleSet& r) {
    if (in.size() != out.size()) throw ContractViolation("net_income_batch: size mismatch");
    const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = net_income(in[static_cast<std::size_t>(i)], r);
}

}  // namespace lcm::rules
