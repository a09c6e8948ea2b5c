#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "lcm/common/errors.hpp"
#include "lcm/env/env.hpp"
#include "lcm/env/features.hpp"

using namespace lcm;
using namespace lcm::env;
using S = EmploymentState;

namespace {

const Model& shipped() {
    static const Model m = load_model(LCM_PARAMS_DIR, 2023);
    return m;
}

AgentState worker(Gender g, double age, S s = S::FullTime, int hours = 40) {
    AgentState a;
    a.gender = g;
    a.age = age;
    a.state = s;
    a.hours = is_working(s) ? hours : 0;
    a.group = 1;
    a.potential_wage = 40000.0;
    a.wage_basis = 3000.0;
    a.career_years = 10.0;
    a.work_history = 0x1ff;
    a.life_left = 400;
    return a;
}

HouseholdState household_of(const AgentState& man, const AgentState& woman) {
    HouseholdState hh;
    hh.agents = {man, woman};
    hh.agents[0].gender = Gender::Male;
    hh.agents[1].gender = Gender::Female;
    hh.quarter = static_cast<int>((man.age - kStartAge) * 4.0);
    hh.rng = Rng(99);
    return hh;
}

// Exogenous hazards switched off.
Model quiet_model() {
    Model m = shipped();
    auto& r = m.demo.rates;
    r.layoff = population::AgeHazard{{0.0}};
    for (auto& g : r.sick_onset) g = {0.0, 0.0, 0.0};
    r.disability = population::AgeHazard{{0.0}};
    r.outsider = {population::AgeHazard{{0.0}}, population::AgeHazard{{0.0}}};
    r.student = population::AgeHazard{{0.0}};
    m.demo.fertility = population::AgeHazard{{0.0}};
    m.demo.marriage = population::AgeHazard{{0.0}};
    m.demo.divorce = population::AgeHazard{{0.0}};
    for (auto& g : m.demo.mortality) g = population::AgeHazard{{0.0}};
    return m;
}

std::array<Action, 2> random_legal(const HouseholdState& hh, const Model& m, Rng& rng) {
    std::array<Action, 2> acts{};
    for (int i = 0; i < 2; ++i) {
        const auto la = legal_actions(hh.agents[i], m.context(hh));
        acts[i] = la[rng() % la.size()];
    }
    return acts;
}

}  // namespace

TEST_CASE("shipped utility parameters match the built-in table") {
    CHECK(to_json(shipped().utility) == to_json(default_utility_params()));
    CHECK(shipped().utility.step_discount() == doctest::Approx(std::pow(0.92, 0.25)));
    auto doc = to_json(default_utility_params());
    doc["kappa"]["work"]["male"][5] = 0.0;
    CHECK_THROWS_AS(utility_from_json(doc), ConfigError);
    doc = to_json(default_utility_params());
    doc["gamma"] = 1.0;
    CHECK_THROWS_AS(utility_from_json(doc), ConfigError);
}

TEST_CASE("utility examples") {
    const auto& p = shipped().utility;
    const double D = 4000.0;
    AgentState dead = worker(Gender::Male, 40.0);
    dead.state = S::Dead;
    CHECK(utility(dead, 0.0, false, 64.0, D, p) == 0.0);

    AgentState ret = worker(Gender::Male, 40.0, S::Retired);
    CHECK(utility(ret, D, false, 64.0, D, p) == 0.0);

    CHECK(utility(worker(Gender::Male, 40.0), D, false, 64.0, D, p) == doctest::Approx(-0.705));
    CHECK(utility(worker(Gender::Female, 40.0), D, false, 64.0, D, p) == doctest::Approx(-0.490));
    CHECK(utility(worker(Gender::Male, 40.0, S::PartTime, 8), D, false, 64.0, D, p) == doctest::Approx(-0.360));
    CHECK(utility(worker(Gender::Male, 40.0), 2.0 * D, false, 64.0, D, p) == doctest::Approx(std::log(2.0) - 0.705));

    CHECK_THROWS_AS(utility(worker(Gender::Male, 40.0), 0.0, false, 64.0, D, p), ContractViolation);
    CHECK_THROWS_AS(utility(worker(Gender::Male, 40.0), -5.0, false, 64.0, D, p), ContractViolation);
}

TEST_CASE("unemployment penalty depends on how the job ended") {
    const auto& p = shipped().utility;
    AgentState a = worker(Gender::Male, 40.0, S::LaborMarketSupport);
    a.pink_slip = false;
    CHECK(kappa(a, false, p) == doctest::Approx(-0.150));
    a.age = 25.0;
    CHECK(kappa(a, false, p) == doctest::Approx(-0.250));
    a.age = 58.0;
    CHECK(kappa(a, false, p) == doctest::Approx(-0.100));
    a.pink_slip = true;
    CHECK(kappa(a, false, p) == 0.0);
    a.gender = Gender::Female;
    a.pink_slip = false;
    a.age = 40.0;
    a.state = S::EarningsRelatedUnemployed;
    CHECK(kappa(a, false, p) == doctest::Approx(-0.400));
    a.state = S::ChildHomeCare;
    CHECK(kappa(a, false, p) == doctest::Approx(0.050));
    a.state = S::SickLeave;
    CHECK(kappa(a, false, p) == doctest::Approx(-0.5));
}

TEST_CASE("mu term") {
    const auto& p = shipped().utility;
    CHECK(mu_term(59.0, Gender::Male, 40, 64.0, p) == 0.0);
    CHECK(mu_term(50.0, Gender::Male, 40, 64.0, p) == 0.0);
    CHECK(mu_term(64.0, Gender::Male, 40, 64.0, p) == doctest::Approx(0.375));
    CHECK(mu_term(61.0, Gender::Female, 40, 64.0, p) == 0.0);
    CHECK(mu_term(64.0, Gender::Female, 20, 64.0, p) == doctest::Approx(0.065 * 0.5 * 3.0));
    const double cap = 0.075 * 5.0 + 0.035 * 15.0;
    CHECK(mu_term(64.0 + 15.0 + 10.0, Gender::Male, 40, 64.0, p) == doctest::Approx(cap));
    CHECK(mu_term(64.0 + 15.0, Gender::Male, 40, 64.0, p) == doctest::Approx(cap));
    CHECK(mu_term(70.0, Gender::Male, 0, 64.0, p) == 0.0);
    // non-decreasing in age and hours
    for (double age = 18.0; age < 100.0; age += 0.25) {
        for (int h = 8; h < 48; h += 8) {
            REQUIRE(mu_term(age + 0.25, Gender::Male, h, 64.0, p) >= mu_term(age, Gender::Male, h, 64.0, p));
            REQUIRE(mu_term(age, Gender::Female, h + 8, 64.0, p) >= mu_term(age, Gender::Female, h, 64.0, p));
        }
    }
}

TEST_CASE("transition table cells") {
    CHECK(transition_cell(S::FullTime, S::RetiredPartTime) == '-');
    CHECK(transition_cell(S::FullTime, S::PartTime) == 'D');
    CHECK(transition_cell(S::FullTime, S::EarningsRelatedUnemployed) == 'E');
    CHECK(transition_cell(S::ChildHomeCare, S::Retired) == '-');
    CHECK(transition_cell(S::LaborMarketSupport, S::EarningsRelatedUnemployed) == '-');
    CHECK(transition_cell(S::SickLeave, S::OutsideWorkforce) == '-');
    CHECK(transition_cell(S::Disabled, S::Retired) == 'E');
    CHECK(transition_cell(S::MothersLeave, S::FullTime) == '*');
    CHECK(transition_cell(S::SickLeave, S::FullTime) == '^');
    CHECK(transition_cell(S::Student, S::PartTime) == 'D');
    CHECK(transition_cell(S::Student, S::FullTime) == '-');
    CHECK(transition_cell(S::PartTime, S::LaborMarketSupport) == 'E');
    CHECK(transition_cell(S::ExtendedUnemployed, S::FullTime) == 'D');
    CHECK(is_legal_move(S::Retired, S::Dead));
    CHECK_FALSE(is_legal_move(S::Dead, S::Retired));
    for (int s = 0; s < kEmploymentStateCount - 1; ++s) CHECK(is_legal_move(static_cast<S>(s), S::Dead));
}

TEST_CASE("legal actions") {
    const DecisionContext ctx{64.0, 61.0, false};
    auto set_of = [](const std::vector<Action>& v) { return std::set<Action>(v.begin(), v.end()); };

    const auto ret = set_of(legal_actions(worker(Gender::Male, 66.0, S::Retired), ctx));
    CHECK(ret == std::set<Action>{Action::Stay, Action::Retire, Action::RetiredWork8, Action::RetiredWork16,
                                  Action::RetiredWork24, Action::RetiredWork32, Action::RetiredWork40,
                                  Action::RetiredWork48});

    const auto st = set_of(legal_actions(worker(Gender::Female, 20.0, S::Student), ctx));
    CHECK(st == std::set<Action>{Action::Stay, Action::PartTime8, Action::PartTime16, Action::PartTime24});

    const auto ft = set_of(legal_actions(worker(Gender::Male, 50.0), ctx));
    CHECK_FALSE(ft.count(Action::Retire));
    CHECK_FALSE(ft.count(Action::PartialEarly25));
    CHECK(ft.count(Action::Quit));
    CHECK_FALSE(ft.count(Action::HomeCare));
    CHECK(set_of(legal_actions(worker(Gender::Male, 50.0), DecisionContext{64.0, 61.0, true})).count(Action::HomeCare));

    const auto ft62 = set_of(legal_actions(worker(Gender::Male, 62.0), ctx));
    CHECK(ft62.count(Action::PartialEarly50));
    CHECK_FALSE(ft62.count(Action::Retire));
    CHECK(set_of(legal_actions(worker(Gender::Male, 64.0), ctx)).count(Action::Retire));

    CHECK_FALSE(set_of(legal_actions(worker(Gender::Male, 40.0, S::PartTime, 16), ctx)).count(Action::Quit));

    AgentState sick = worker(Gender::Male, 40.0, S::SickLeave);
    sick.spell_left = 2;
    CHECK(legal_actions(sick, ctx) == std::vector<Action>{Action::Stay});
    sick.spell_left = 0;
    CHECK(legal_actions(sick, ctx).size() > 1);

    AgentState dead = worker(Gender::Male, 40.0);
    dead.state = S::Dead;
    CHECK(legal_actions(dead, ctx) == std::vector<Action>{Action::Stay});
    CHECK(legal_actions(worker(Gender::Male, 40.0, S::Disabled), ctx) == std::vector<Action>{Action::Stay});
}

TEST_CASE("every legal action lands in a decision cell") {
    const Model m = quiet_model();
    Rng rng(3);
    for (int trial = 0; trial < 4000; ++trial) {
        auto s = static_cast<S>(rng() % (kEmploymentStateCount - 1));
        AgentState a = worker(Gender::Female, 18.0 + 57.0 * uniform01(rng), s, is_working(s) ? 40 : 0);
        a.spell_left = static_cast<int>(rng() % 2);
        a.return_state = uniform01(rng) < 0.5 ? S::FullTime : S::LaborMarketSupport;
        a.er_days_used = static_cast<int>(rng() % 500);
        a.unemp_wage_basis = 2500.0;
        HouseholdState hh = household_of(worker(Gender::Male, a.age), a);
        if (uniform01(rng) < 0.3) {
            hh.n_children = 1;
            hh.child_age_q[0] = 2;
        }
        for (Action act : legal_actions(hh.agents[1], m.context(hh))) {
            HouseholdState copy = hh;
            const S to = apply_decision(copy, 1, act, m);
            if (to != s) REQUIRE_MESSAGE(is_legal_move(s, to), short_name(s), " -> ", short_name(to));
        }
    }
}

TEST_CASE("illegal actions are contract violations") {
    const Model& m = shipped();
    HouseholdState hh = household_of(worker(Gender::Male, 40.0, S::Student), worker(Gender::Female, 40.0));
    CHECK_THROWS_AS(apply_decision(hh, 0, Action::FullTime40, m), ContractViolation);
    CHECK_THROWS_AS(step(hh, {Action::Retire, Action::Stay}, m), ContractViolation);
}

TEST_CASE("job search friction") {
    const Model m = quiet_model();
    const int n = 200000;
    int ft = 0, pt = 0;
    for (int i = 0; i < n; ++i) {
        AgentState a = worker(Gender::Male, 40.0, S::EarningsRelatedUnemployed);
        HouseholdState hh = household_of(a, worker(Gender::Female, 40.0));
        hh.rng = Rng(derive_seed(17, static_cast<std::uint64_t>(i)));
        const S to = apply_decision(hh, 0, Action::FullTime40, m);
        ft += to == S::FullTime;
        pt += to == S::PartTime;
    }
    const double p = 0.25;
    CHECK(std::abs(ft / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
    const double q = (1 - p) * m.wage.friction.part_time_fallback;
    CHECK(std::abs(pt / double(n) - q) < 4.0 * std::sqrt(q * (1 - q) / n));
}

TEST_CASE("retiree staying retired keeps the pension") {
    const Model m = quiet_model();
    AgentState r = worker(Gender::Male, 66.0, S::Retired);
    r.pension_paid = 1800.0;
    r.pension_accrued = 1800.0;
    HouseholdState hh = household_of(r, worker(Gender::Female, 66.0, S::Retired));
    hh.agents[1].pension_paid = 900.0;
    for (int q = 0; q < 8; ++q) {
        const auto res = step(hh, {Action::Stay, Action::Stay}, m);
        CHECK(hh.agents[0].state == S::Retired);
        CHECK(hh.agents[0].pension_paid == 1800.0);
        CHECK((*res.cash.adult_flows(0))[rules::Benefit::EarningsPension] == doctest::Approx(3.0 * 1800.0));
    }
}

TEST_CASE("quitting and layoffs") {
    Model m = quiet_model();
    HouseholdState hh = household_of(worker(Gender::Male, 40.0), worker(Gender::Female, 40.0));
    step(hh, {Action::Quit, Action::Stay}, m);
    CHECK(hh.agents[0].state == S::LaborMarketSupport);
    CHECK_FALSE(hh.agents[0].pink_slip);
    CHECK(kappa(hh.agents[0], false, m.utility) == doctest::Approx(-0.150));

    m.demo.rates.layoff = population::AgeHazard{{1.0}};
    HouseholdState h2 = household_of(worker(Gender::Male, 40.0), worker(Gender::Female, 40.0, S::Student));
    h2.agents[0].fund_member = true;
    step(h2, {Action::Stay, Action::Stay}, m);
    const auto& a = h2.agents[0];
    CHECK(a.state == S::EarningsRelatedUnemployed);
    CHECK(a.pink_slip);
    CHECK(kappa(a, false, m.utility) == 0.0);
    CHECK(a.er_days_used == 0);
    CHECK(a.er_max_days == 400);
    CHECK(a.unemp_wage_basis > 0.0);
}

TEST_CASE("benefit duration and employment condition") {
    const auto& r = shipped().rules;
    AgentState a = worker(Gender::Male, 40.0);
    a.career_years = 2.0;
    CHECK(max_benefit_days(a, r) == 300);
    a.career_years = 10.0;
    CHECK(max_benefit_days(a, r) == 400);
    a.age = 58.0;
    CHECK(max_benefit_days(a, r) == 500);

    const int need = static_cast<int>(std::ceil(r.er.employment_condition_months / 3.0));
    a.work_history = static_cast<std::uint16_t>((1u << need) - 1u);
    CHECK(employment_condition_met(a, r));
    a.work_history = static_cast<std::uint16_t>((1u << (need - 1)) - 1u);
    CHECK_FALSE(employment_condition_met(a, r));
    // quarters older than the window do not count
    a.work_history = static_cast<std::uint16_t>(0xffffu << r.er.employment_condition_window_quarters);
    CHECK_FALSE(employment_condition_met(a, r));
}

TEST_CASE("exogenous transitions") {
    Model m = quiet_model();
    SUBCASE("no hazards, no forced moves") {
        Rng pr(1);
        for (int k = 0; k < 200; ++k) {
            HouseholdState hh = household_of(worker(Gender::Male, 30.0), worker(Gender::Female, 30.0, S::PartTime, 16));
            hh.rng = Rng(static_cast<std::uint64_t>(k));
            for (int q = 0; q < 40; ++q) {
                const auto res = step(hh, {Action::Stay, Action::Stay}, m);
                REQUIRE(hh.agents[0].state == res.decided[0]);
                REQUIRE(hh.agents[1].state == res.decided[1]);
            }
        }
    }
    SUBCASE("a year of sick leave can end in disability") {
        m.demo.rates.disability_after_sick = 1.0;
        m.demo.rates.sick_recovery = 0.0;
        for (auto& g : m.demo.rates.sick_onset) g = {1.0, 1.0, 1.0};
        HouseholdState hh = household_of(worker(Gender::Male, 40.0), worker(Gender::Female, 40.0, S::Retired));
        step(hh, {Action::Stay, Action::Stay}, m);
        CHECK(hh.agents[0].state == S::SickLeave);
        for (int q = 0; q < 4; ++q) step(hh, {Action::Stay, Action::Stay}, m);
        CHECK(hh.agents[0].state == S::Disabled);
        CHECK(hh.agents[0].pension_paid > 0.0);
    }
    SUBCASE("a birth sends the mother on leave and she returns to her job") {
        HouseholdState hh = household_of(worker(Gender::Male, 30.0), worker(Gender::Female, 30.0));
        hh.partnered = true;
        hh.until_birth = 1;
        m.demo.rates.fathers_leave_prob = 0.0;
        step(hh, {Action::Stay, Action::Stay}, m);
        CHECK(hh.n_children == 1);
        CHECK(hh.agents[1].state == S::MothersLeave);
        CHECK(hh.agents[1].return_state == S::FullTime);
        CHECK(hh.agents[0].state == S::FullTime);
        for (int q = 0; q < m.demo.rates.mothers_leave_quarters; ++q) {
            CHECK(legal_actions(hh.agents[1], m.context(hh)) == std::vector<Action>{Action::Stay});
            step(hh, {Action::Stay, Action::Stay}, m);
        }
        CHECK(hh.agents[1].spell_left == 0);
        step(hh, {Action::Stay, Action::Stay}, m);
        CHECK(hh.agents[1].state == S::FullTime);
        CHECK(hh.agents[1].hours > 0);
    }
}

TEST_CASE("clocks tick one quarter per step") {
    const Model& m = shipped();
    auto pop = make_cohort(300, m, 12);
    Rng pr(4);
    for (auto& hh : pop.households) {
        for (int q = 0; q < 60; ++q) {
            const auto before = hh;
            step(hh, random_legal(hh, m, pr), m);
            for (int i = 0; i < 2; ++i) {
                const auto& b = before.agents[i];
                const auto& a = hh.agents[i];
                if (!a.alive()) continue;
                REQUIRE(a.age == b.age + 0.25);
                REQUIRE(a.life_left == b.life_left - 1);
                if (b.until_outsider != kNever && b.until_outsider > 1) REQUIRE(a.until_outsider == b.until_outsider - 1);
                if (b.until_student != kNever && b.until_student > 1) REQUIRE(a.until_student == b.until_student - 1);
            }
            REQUIRE(hh.quarter == before.quarter + 1);
        }
    }
}

TEST_CASE("legality audit and finite rewards over a million agent-quarters") {
    const Model& m = shipped();
    auto pop = make_cohort(2400, m, 2024);
    Rng pr(8);
    TransitionAudit audit;
    std::uint64_t living = 0;
    for (auto& hh : pop.households) {
        for (;;) {
            const auto res = step(hh, random_legal(hh, m, pr), m, &audit);
            for (int i = 0; i < 2; ++i) {
                if (res.cash.consumption[i] > 0.0) {
                    ++living;
                    REQUIRE(std::isfinite(res.reward[i]));
                }
            }
            if (res.done) break;
        }
    }
    CHECK(audit.total() >= 1000000);
    CHECK(audit.violations() == 0);
    CHECK(living > 900000);
}

TEST_CASE("step is deterministic") {
    const Model& m = shipped();
    auto a = make_cohort(50, m, 5);
    auto b = make_cohort(50, m, 5);
    Rng p1(2), p2(2);
    for (int q = 0; q < 100; ++q) {
        for (int h = 0; h < 50; ++h) {
            const auto r1 = step(a.households[h], random_legal(a.households[h], m, p1), m);
            const auto r2 = step(b.households[h], random_legal(b.households[h], m, p2), m);
            REQUIRE(r1.reward == r2.reward);
        }
    }
    CHECK(population::to_json(a) == population::to_json(b));
}

TEST_CASE("static phase") {
    const Model m = quiet_model();
    AgentState man = worker(Gender::Male, 75.0, S::Retired);
    man.pension_paid = 2000.0;
    man.life_left = 20;
    AgentState woman = worker(Gender::Female, 75.0, S::FullTime);
    woman.pension_accrued = 1200.0;
    woman.life_left = 60;
    HouseholdState hh = household_of(man, woman);
    hh.partnered = true;

    double pensions = 0.0;
    int quarters = 0;
    std::vector<double> man_pension;
    const auto res = static_phase(hh, m, [&](const HouseholdState& h, const QuarterCash& c) {
        ++quarters;
        for (int i = 0; i < 2; ++i) {
            const auto* f = c.adult_flows(i);
            if (!f || !h.agents[i].alive()) continue;
            REQUIRE(h.agents[i].state == S::Retired);
            const double p = (*f)[rules::Benefit::EarningsPension] + (*f)[rules::Benefit::NationalPension] +
                             (*f)[rules::Benefit::GuaranteePension];
            pensions += p;
            if (i == 0) man_pension.push_back(p);
        }
        if (!h.agents[0].alive()) REQUIRE(h.agents[0].state == S::Dead);
    });
    CHECK(res.quarters == 60);
    CHECK(quarters == 60);
    CHECK(res.pension_paid == doctest::Approx(pensions));
    CHECK(man_pension.size() == 20);
    for (double p : man_pension) CHECK(p == man_pension.front());
    CHECK(std::isfinite(res.value[0]));
    CHECK(res.value[1] != 0.0);
    // input household is untouched
    CHECK(hh.agents[1].state == S::FullTime);
}

TEST_CASE("features") {
    const Model& m = shipped();
    CHECK(feature_names().size() == static_cast<std::size_t>(kFeatureCount));
    auto pop = make_cohort(200, m, 6);
    Rng pr(1);
    for (auto& hh : pop.households) {
        for (int q = 0; q < 120; ++q) {
            for (int i = 0; i < 2; ++i) {
                const auto f = features(hh, i, m);
                for (float v : f) REQUIRE(std::isfinite(v));
                REQUIRE(f[static_cast<std::size_t>(index_of(hh.agents[i].state))] == 1.0f);
                REQUIRE(std::count(f.begin(), f.begin() + kEmploymentStateCount, 1.0f) == 1);
            }
            step(hh, random_legal(hh, m, pr), m);
        }
    }
}
