#include <cmath>
#include <vector>

#include "doctest.h"
#include "lcm/common/errors.hpp"
#include "lcm/rules/engine.hpp"
#include "support/snapshots.hpp"

using namespace lcm;
using namespace lcm::rules;

namespace {

std::vector<RuleSet> shipped() {
    std::vector<RuleSet> out;
    for (int y = 2018; y <= 2024; ++y) out.push_back(load_ruleset_for_year(LCM_PARAMS_DIR "/rules", y));
    return out;
}

RuleSet graded(RuleSet r) {
    r.er.grading = std::vector<GradingStep>{{0, 1.0}, {40, 0.8}, {170, 0.75}};
    return r;
}

AdultSnapshot adult(EmploymentState s, double wage_mo = 0.0) {
    AdultSnapshot a;
    a.state = s;
    a.wage_q = 3.0 * wage_mo;
    return a;
}

HouseholdSnapshot single(const AdultSnapshot& a, double rent) {
    HouseholdSnapshot hh;
    hh.adults[0] = a;
    hh.rent_mo = rent;
    return hh;
}

double employee_wage_rate(const RuleSet& r) {
    return r.employee.pension + r.employee.unemployment + r.employee.health_daily + r.employee.health_medical;
}

}  // namespace

TEST_CASE("shipped rule files load and round-trip through JSON") {
    for (const auto& r : shipped()) {
        const RuleSet back = ruleset_from_json(to_json(r));
        CHECK(to_json(back) == to_json(r));
    }
}

TEST_CASE("rule set validation rejects broken invariants") {
    RuleSet r = shipped().back();
    auto bad = to_json(r);
    bad["municipal_rate"] = 1.5;
    CHECK_THROWS_AS(ruleset_from_json(bad), ConfigError);
    bad = to_json(r);
    bad["tax_brackets"] = Json::array({Json::array({0, 0.0}), Json::array({0, 0.1})});
    CHECK_THROWS_AS(ruleset_from_json(bad), ConfigError);
    bad = to_json(r);
    bad["er_benefit"]["grading"] = Json::array({Json::array({0, 0.8}), Json::array({40, 0.9})});
    CHECK_THROWS_AS(ruleset_from_json(bad), ConfigError);
    bad = to_json(r);
    bad["pension"]["basic_cutoff"] = 0.0;
    CHECK_THROWS_AS(ruleset_from_json(bad), ConfigError);
    bad = to_json(r);
    bad["er_benefit"]["max_days_standard"] = 350;
    CHECK_THROWS_AS(ruleset_from_json(bad), ConfigError);
    bad = to_json(r);
    bad.erase("vat_rate");
    CHECK_THROWS_AS(ruleset_from_json(bad), ConfigError);
    CHECK_THROWS_AS(load_ruleset_for_year(LCM_PARAMS_DIR "/rules", 1999), ConfigError);
}

TEST_CASE("taxes and contributions") {
    for (const auto& r : shipped()) {
        const auto zero = taxes_and_contributions(0.0, r);
        CHECK(zero.taxes() == 0.0);
        CHECK(zero.contributions() == 0.0);
        CHECK(zero.employer() == 0.0);

        // At the first taxed bracket bound the deductible contributions keep taxable income below it.
        const double bound = r.tax_brackets[1].lower;
        const auto t = taxes_and_contributions(bound, r);
        const double taxable = bound * (1.0 - employee_wage_rate(r));
        CHECK(t.state == 0.0);
        CHECK(t.municipal == doctest::Approx(r.municipal_rate * (taxable - r.municipal_allowance)).epsilon(1e-12));

        // Marginal rate constant inside a bracket, above the YLE cap.
        const double lo = r.tax_brackets[2].lower / (1.0 - employee_wage_rate(r)) + 2000.0;
        const double hi = r.tax_brackets[3].lower / (1.0 - employee_wage_rate(r)) - 2000.0;
        auto total = [&](double g) {
            const auto x = taxes_and_contributions(g, r);
            return x.taxes() + x.contributions();
        };
        const double m1 = (total(lo + 100.0) - total(lo)) / 100.0;
        const double m2 = (total(hi) - total(hi - 100.0)) / 100.0;
        if (r.yle.rate * (lo - r.yle.threshold) >= r.yle.cap) CHECK(m1 == doctest::Approx(m2).epsilon(1e-9));

        // Convexity of the state tax on a grid.
        double prev_slope = -1.0;
        for (double x = 0.0; x < 150000.0; x += 500.0) {
            const double s = state_income_tax(x + 500.0, r) - state_income_tax(x, r);
            CHECK(s >= prev_slope - 1e-9);
            prev_slope = s;
        }
    }
}

TEST_CASE("unemployment benefit") {
    const RuleSet base = shipped().back();
    const RuleSet r = graded(base);
    // basis giving an initial daily benefit of exactly 100, by bisection on the monotone level
    double lo = 0.0, hi = 20000.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (earnings_related_daily(mid, r) < 100.0 ? lo : hi) = mid;
    }
    const double basis = 0.5 * (lo + hi);
    CHECK(unemployment_benefit(basis, 10, true, r) == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(unemployment_benefit(basis, 100, true, r) == doctest::Approx(80.0).epsilon(1e-9));
    CHECK(unemployment_benefit(basis, 200, true, r) == doctest::Approx(75.0).epsilon(1e-9));

    CHECK(unemployment_benefit(basis, 0, false, r) == r.basic_ub_daily);
    CHECK(unemployment_benefit(5000.0, 0, false, base) == base.basic_ub_daily);
    for (int md : {300, 400, 500}) {
        CHECK(unemployment_benefit(basis, md, true, md, r) == r.basic_ub_daily);
        CHECK(unemployment_benefit(basis, md - 1, true, md, r) > r.basic_ub_daily);
    }
    for (double b = 0.0; b < 10000.0; b += 97.0) CHECK(earnings_related_daily(b, base) >= base.basic_ub_daily);

    // Hand evaluation of the replacement schedule.
    const double basis2 = 5000.0;
    const double w = basis2 * (1.0 - base.er.wage_deduction) / kBenefitDaysPerMonth;
    const double bp = base.er.breakpoint_mo / kBenefitDaysPerMonth;
    const double expect = base.basic_ub_daily + base.er.base_rate * (bp - base.basic_ub_daily) + base.er.upper_rate * (w - bp);
    CHECK(earnings_related_daily(basis2, base) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("grading monotone in days used") {
    const RuleSet r = graded(shipped().back());
    for (double basis : {0.0, 1500.0, 3000.0, 8000.0}) {
        double prev = 1e300;
        for (int d = 0; d <= 600; ++d) {
            const double v = unemployment_benefit(basis, d, true, 500, r);
            CHECK(v <= prev);
            prev = v;
        }
    }
}

TEST_CASE("pension benefit") {
    for (const auto& r : shipped()) {
        const auto p0 = pension_benefit(0.0, r);
        CHECK(p0.basic == r.pension.basic_pension_full);
        CHECK(p0.total() == doctest::Approx(std::max(r.pension.guarantee_level, r.pension.basic_pension_full)));
        CHECK(pension_benefit(1527.0, r).basic == 0.0);
        CHECK(pension_benefit(800.0, r).basic == doctest::Approx(r.pension.basic_pension_full - 400.0));
        double prev = 0.0;
        for (double a = 0.0; a < 4000.0; a += 3.7) {
            const double tot = pension_benefit(a, r).total();
            CHECK(tot >= prev - 1e-12);
            prev = tot;
        }
    }
}

TEST_CASE("housing benefit") {
    const RuleSet r = shipped().back();
    HouseholdSnapshot hh = single(adult(EmploymentState::OutsideWorkforce), 500.0);
    const auto& s = r.housing.general;
    CHECK(housing_benefit(hh, 0.0, r) == doctest::Approx(s.coverage * (std::min(500.0, s.max_rent_by_size[0]) - s.base_deductible_mo)));
    CHECK(housing_benefit(hh, 1e6, r) == 0.0);
    const double a = housing_benefit(hh, s.income_threshold_mo + 200.0, r);
    const double b = housing_benefit(hh, s.income_threshold_mo + 260.0, r);
    CHECK(a - b == doctest::Approx(s.taper * 60.0));

    double prev = 1e300;
    for (double inc = 0.0; inc < 5000.0; inc += 25.0) {
        const double v = housing_benefit(hh, inc, r);
        CHECK(v >= 0.0);
        CHECK(v <= hh.rent_mo);
        CHECK(v <= prev);
        prev = v;
    }
    HouseholdSnapshot ret = single(adult(EmploymentState::Retired), 500.0);
    const auto& rs = r.housing.retiree;
    CHECK(housing_benefit(ret, 0.0, r) == doctest::Approx(rs.coverage * (std::min(500.0, rs.max_rent_by_size[0]) - rs.base_deductible_mo)));
}

TEST_CASE("social assistance") {
    const RuleSet r = shipped().back();
    const double rent = 600.0;
    const double sa0 = social_assistance(single(adult(EmploymentState::PartTime, 0.0), rent), 0.0, r);
    const double sa150 = social_assistance(single(adult(EmploymentState::PartTime, 150.0), rent), 0.0, r);
    const double sa250 = social_assistance(single(adult(EmploymentState::PartTime, 250.0), rent), 0.0, r);
    CHECK(sa0 == doctest::Approx(r.social_assistance.norm_single + rent));
    CHECK(sa150 == doctest::Approx(sa0));
    CHECK(sa150 - sa250 == doctest::Approx(100.0));
    const auto hh = single(adult(EmploymentState::OutsideWorkforce), rent);
    CHECK(social_assistance(hh, r.social_assistance.norm_single + rent, r) == 0.0);
    CHECK(social_assistance(hh, 5000.0, r) == 0.0);
}

TEST_CASE("net income composition") {
    for (const auto& r : shipped()) {
        // zero snapshot: housing benefit plus social assistance bring net to norm + rent
        const double rent = r.rent_table[0];
        const auto cf = net_income(single(adult(EmploymentState::OutsideWorkforce), rent), r);
        const double net = 3.0 * (r.social_assistance.norm_single + rent);
        CHECK(cf.household.net == doctest::Approx(net).epsilon(1e-12));
        CHECK(cf.consumption == doctest::Approx(net - r.vat_rate * (net - 3.0 * rent)).epsilon(1e-12));
        CHECK(cf.household[Benefit::HousingBenefit] > 0.0);

        // high earner without children: no benefits
        const auto rich = net_income(single(adult(EmploymentState::FullTime, 9000.0), rent), r);
        CHECK(rich.household.total_benefits() == 0.0);
        CHECK(rich.household.net == doctest::Approx(rich.household.gross - rich.household.total_taxes() -
                                                    rich.household.total_contributions()));
        const auto tb = taxes_and_contributions(12.0 * 9000.0, r);
        CHECK(rich.household.total_taxes() == doctest::Approx(tb.taxes() / 4.0));
    }
}

TEST_CASE("deceased partner") {
    const RuleSet r = shipped().back();
    HouseholdSnapshot hh;
    hh.n_adults = 2;
    hh.partnered = true;
    hh.adults[0] = adult(EmploymentState::FullTime, 6000.0);
    hh.adults[1] = adult(EmploymentState::Dead);
    hh.adults[1].accrued_pension_mo = 1800.0;
    hh.adults[1].wage_q = 0.0;
    hh.rent_mo = 800.0;
    const auto cf = net_income(hh, r);
    const auto& dead = cf.adult[1];
    CHECK(dead.gross == 0.0);
    CHECK(dead.total_benefits() == 0.0);
    CHECK(dead.total_taxes() == 0.0);
    CHECK(dead.net == 0.0);
    CHECK(cf.adult[0][Benefit::SurvivorPension] == doctest::Approx(3.0 * 0.5 * 1800.0));
}

TEST_CASE("budget identity and batch equivalence on random snapshots") {
    const auto rs = shipped();
    Rng rng(20240601);
    std::vector<HouseholdSnapshot> hhs;
    for (int i = 0; i < 2000; ++i) hhs.push_back(testing::random_household(rng));
    for (const auto& r : rs) {
        std::vector<CashFlows> a(hhs.size()), b(hhs.size());
        net_income_batch(hhs, a, r);
        net_income_batch_serial(hhs, b, r);
        for (std::size_t i = 0; i < hhs.size(); ++i) {
            REQUIRE(hhs[i].valid());
            const auto& f = a[i].household;
            CHECK(std::abs(f.net - f.identity_net()) < 1e-6);
            CHECK(f.net > 0.0);
            CHECK(a[i].consumption + a[i].vat == doctest::Approx(f.net));
            CHECK(a[i].vat == doctest::Approx(r.vat_rate * std::max(0.0, f.net - 3.0 * hhs[i].rent_mo)));
            CHECK(f.net == b[i].household.net);
            CHECK(a[i].consumption == b[i].consumption);
            for (double v : f.benefits) CHECK(v >= 0.0);
            for (double v : f.taxes) CHECK(v >= 0.0);
            for (double v : f.contributions) CHECK(v >= 0.0);
        }
    }
}

TEST_CASE("emtr") {
    const RuleSet r = shipped().back();
    // deep in the social assistance taper
    const auto low = single(adult(EmploymentState::PartTime, 400.0), 600.0);
    const auto e = emtr(low, r, 100.0);
    CHECK(e.total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(e.component_sum() - e.total) < 1e-9);

    // far above all means tests: top bracket plus wage contributions
    const auto high = single(adult(EmploymentState::FullTime, 20000.0), 600.0);
    const double c = employee_wage_rate(r);
    const double wedge = c + (1.0 - c) * (r.tax_brackets.back().rate + r.municipal_rate);
    CHECK(emtr(high, r).total == doctest::Approx(wedge).epsilon(1e-9));

    // inside the disregard region social assistance is not withdrawn
    const auto zero = single(adult(EmploymentState::PartTime, 0.0), 600.0);
    CHECK(emtr(zero, r, 100.0).benefits[static_cast<int>(Benefit::SocialAssistance)] <= 1e-12);

    CHECK_THROWS_AS(emtr(zero, r, 0.0), ContractViolation);
}

TEST_CASE("net income non-decreasing in wage") {
    for (const auto& r : shipped()) {
        Rng rng(77);
        for (int k = 0; k < 200; ++k) {
            auto hh = testing::random_household(rng);
            hh.adults[0].state = uniform01(rng) < 0.5 ? EmploymentState::FullTime : EmploymentState::PartTime;
            hh.adults[0].wage_q = 0.0;
            double prev = net_income(hh, r).household.net;
            for (int s = 1; s <= 120; ++s) {
                hh.adults[0].wage_q = 3.0 * 100.0 * s;
                const double n = net_income(hh, r).household.net;
                CHECK(n >= prev - 1e-6);
                prev = n;
            }
        }
    }
}

TEST_CASE("ptr") {
    const RuleSet r = shipped().back();
    RuleSet flat = r;
    flat.tax_brackets = {{0.0, 0.0}};
    flat.municipal_rate = 0.0;
    flat.yle.rate = 0.0;
    flat.employee = {};
    flat.social_assistance.norm_single = 0.0;
    flat.housing.general.coverage = 0.0;
    flat.housing.general.base_deductible_mo = 0.0;
    flat.housing.general.taper = 0.0;
    auto emp0 = single(adult(EmploymentState::FullTime, 3000.0), 0.0);
    auto un0 = single(adult(EmploymentState::OutsideWorkforce), 0.0);
    CHECK(ptr(emp0, un0, flat) == doctest::Approx(0.0));
    // same net in both arms: nothing gained from working
    auto un_same = emp0;
    un_same.adults[0].wage_q = 0.0;
    un_same.adults[0].state = EmploymentState::Student;
    RuleSet st = flat;
    st.student_allowance_mo = 3000.0;
    CHECK(ptr(emp0, un_same, st) == doctest::Approx(1.0));
    CHECK_THROWS_AS(ptr(un0, un0, r), ContractViolation);
}

TEST_CASE("household template JSON and EMTR scan") {
    const RuleSet r = shipped().back();
    const Json doc = {{"adults", {{{"state", "part_time"}, {"gender", "female"}, {"age", 35.0}}}}, {"rent_mo", 600.0}};
    const auto hh = snapshot_from_json(doc);
    CHECK(hh.n_adults == 1);
    CHECK_FALSE(hh.partnered);
    CHECK(hh.adults[0].state == EmploymentState::PartTime);
    CHECK(snapshot_from_json(to_json(hh)).rent_mo == 600.0);
    CHECK_THROWS_AS(snapshot_from_json({{"adults", Json::array()}}), ConfigError);
    CHECK_THROWS_AS(snapshot_from_json({{"adults", {{{"stat", "x"}}}}}), ConfigError);
    CHECK_THROWS_AS(snapshot_from_json({{"adults", {{{"state", "nowhere"}}}}}), ConfigError);

    const std::vector<double> wages{0.0, 400.0, 8000.0, 20000.0};
    const auto rows = emtr_scan(hh, r, wages);
    REQUIRE(rows.size() == wages.size());
    CHECK(rows[0].wage_mo == 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(std::abs(rows[i].emtr.component_sum() - rows[i].emtr.total) < 1e-9);
        auto one = hh;
        one.adults[0].wage_q = 3.0 * wages[i];
        CHECK(rows[i].emtr.total == emtr(one, r).total);
    }
    CHECK(rows[1].emtr.total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rows[3].emtr.total < 1.0);
}
