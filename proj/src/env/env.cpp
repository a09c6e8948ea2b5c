#include "lcm/env/env.hpp"

#include <algorithm>
#include <cmath>

#include "lcm/common/errors.hpp"

namespace lcm::env {

using S = EmploymentState;
namespace pop = population;

DecisionContext Model::context(const HouseholdState& hh) const {
    return DecisionContext{rules.pension.min_retirement_age, rules.pension.partial_early_min_age,
                           hh.children_under3() > 0};
}

Model load_model(const std::filesystem::path& params_dir, int year) {
    Model m;
    m.rules = rules::load_ruleset_for_year(params_dir / "rules", year);
    m.wage = wage::load_wage_model(params_dir / "model" / "wages.json");
    m.demo = pop::load_tables(params_dir / "model" / "demographics.json");
    m.utility = load_utility(params_dir / "model" / "utility.json");
    return m;
}

namespace {

double annual_to_monthly(double w) { return w / 12.0; }

bool receives_er(const AgentState& a) {
    return a.fund_member && a.er_days_used < a.er_max_days &&
           (a.state == S::EarningsRelatedUnemployed || a.state == S::ExtendedUnemployed);
}

// Hours and trackers that follow from entering a state.
void enter_state(AgentState& a, S next, int hours) {
    if (next == a.state) {
        if (hours > 0) a.hours = hours;
        return;
    }
    a.state = next;
    a.time_in_state = 0.0;
    a.hours = is_working(next) ? hours : 0;
    if (is_working(next)) a.pink_slip = false;
    const bool spell = next == S::MothersLeave || next == S::FathersLeave || next == S::SickLeave ||
                       next == S::OutsideWorkforce || next == S::Student;
    if (!spell) a.spell_left = 0;
}

void start_unemployment(AgentState& a, const rules::RuleSet& r) {
    if (a.fund_member && employment_condition_met(a, r)) {
        a.er_max_days = max_benefit_days(a, r);
        a.er_days_used = 0;
        a.unemp_wage_basis = a.wage_basis;
        a.er_began_age = a.age;
        a.new_condition = true;
    } else if (a.er_days_used >= a.er_max_days) {
        a.er_days_used = a.er_max_days;
        a.new_condition = false;
    }
    a.er_days_left = std::max(0, a.er_max_days - a.er_days_used);
}

// Where a leave or sick spell ends by default.
S spell_return(const AgentState& a, bool child_under3) {
    switch (a.return_state) {
        case S::FullTime:
        case S::PartTime:
            return a.return_state;
        default:
            break;
    }
    if (a.fund_member && a.er_days_used < a.er_max_days && a.unemp_wage_basis > 0.0) return S::EarningsRelatedUnemployed;
    if (child_under3 && a.state != S::SickLeave) return S::ChildHomeCare;
    return S::LaborMarketSupport;
}

S stay_target(const AgentState& a, const Model& m, bool child_under3) {
    switch (a.state) {
        case S::EarningsRelatedUnemployed:
            return !a.fund_member || a.er_days_used >= a.er_max_days ? S::LaborMarketSupport : a.state;
        case S::ExtendedUnemployed:
            return a.age >= m.min_retirement_age() ? S::Retired : a.state;
        case S::ChildHomeCare:
            return child_under3 ? a.state : S::LaborMarketSupport;
        case S::MothersLeave:
        case S::FathersLeave:
        case S::SickLeave:
            return a.spell_left > 0 ? a.state : spell_return(a, child_under3);
        default:
            return a.state;
    }
}

void retire(AgentState& a, const Model& m) {
    a.pension_paid = retirement_pension(a, m);
    a.partial_pension = 0.0;
}

}  // namespace

double retirement_pension(const AgentState& a, const Model& m) {
    const auto& p = m.rules.pension;
    const double late_months = std::max(0.0, (std::min(a.age, p.insurance_end_age) - p.min_retirement_age) * 12.0);
    const double late = 1.0 + p.late_increase_per_month * late_months;
    return a.partial_pension +
           std::max(0.0, a.pension_accrued - a.partial_base) * p.life_expectancy_coefficient * late;
}

int max_benefit_days(const AgentState& a, const rules::RuleSet& r) {
    const auto& er = r.er;
    if (a.career_years < er.standard_career_years) return er.max_days_short;
    if (a.age >= er.senior_age && a.career_years >= er.senior_career_years) return er.max_days_senior;
    return er.max_days_standard;
}

bool employment_condition_met(const AgentState& a, const rules::RuleSet& r) {
    const auto& er = r.er;
    const int need = static_cast<int>(std::ceil(er.employment_condition_months / 3.0 - 1e-9));
    return a.worked_quarters(er.employment_condition_window_quarters) >= need;
}

void prepare_household(HouseholdState& hh, const Model& m) {
    const auto& wp = m.wage.params;
    const double sd = wp.sigma / std::sqrt(1.0 - wp.autocorr * wp.autocorr);
    for (auto& a : hh.agents) {
        const double avg = wp.average_wage(a.gender, a.group, a.age);
        a.potential_wage = avg * std::exp(sd * standard_normal(hh.rng) - 0.5 * sd * sd);
        a.wage_reduction = 0.0;
        a.paid_wage = is_working(a.state) ? wage::paid_wage(a.potential_wage, 0.0, a.hours) : 0.0;
        a.previous_wage = 0.0;
        a.wage_basis = annual_to_monthly(a.paid_wage);
        a.unemp_wage = a.potential_wage;
        a.er_max_days = m.rules.er.max_days_short;
        a.er_days_used = a.er_max_days;  // no entitlement before a first employment condition
        a.er_days_left = 0;
    }
}

pop::CohortPopulation make_cohort(int n, const Model& m, std::uint64_t seed) {
    auto c = pop::init_population(n, m.demo, seed);
    for (auto& hh : c.households) prepare_household(hh, m);
    return c;
}

const rules::Flows* QuarterCash::adult_flows(int who) const {
    const int u = unit_of[static_cast<std::size_t>(who)];
    if (u < 0) return nullptr;
    return &unit[static_cast<std::size_t>(u)].adult[static_cast<std::size_t>(slot_of[static_cast<std::size_t>(who)])];
}

namespace {

rules::AdultSnapshot adult_snapshot(const AgentState& a) {
    rules::AdultSnapshot s;
    s.state = a.state;
    s.gender = a.gender;
    s.age = a.age;
    s.wage_q = a.paid_wage * kQuarter;
    const bool unemployed = a.state == S::EarningsRelatedUnemployed || a.state == S::ExtendedUnemployed;
    s.benefit_basis_mo = unemployed ? a.unemp_wage_basis : a.wage_basis;
    s.accrued_pension_mo = a.alive() ? a.pension_accrued : std::max(a.pension_accrued, a.pension_paid);
    s.pension_paid_mo = is_pensioner(a.state) ? a.pension_paid : a.partial_pension;
    s.benefit_days_used = a.er_days_used;
    s.max_benefit_days = a.er_max_days;
    s.fund_member = a.fund_member;
    return s;
}

void set_children(rules::HouseholdSnapshot& s, const HouseholdState& hh) {
    s.children_under3 = hh.children_under3();
    s.children_under7 = hh.children_under7();
    s.children_under18 = hh.children_under18();
}

}  // namespace

std::array<rules::HouseholdSnapshot, 2> benefit_units(const HouseholdState& hh, const Model& m, QuarterCash& layout) {
    std::array<rules::HouseholdSnapshot, 2> out{};
    layout.units = 0;
    layout.unit_of = {-1, -1};
    const bool any_alive = hh.agents[0].alive() || hh.agents[1].alive();
    if (!any_alive) return out;

    if (hh.partnered) {
        auto& s = out[0];
        s.n_adults = 2;
        s.partnered = true;
        for (int i = 0; i < 2; ++i) s.adults[static_cast<std::size_t>(i)] = adult_snapshot(hh.agents[static_cast<std::size_t>(i)]);
        set_children(s, hh);
        s.rent_mo = m.rules.rent_for(s.size());
        layout.units = 1;
        layout.unit_of = {0, 0};
        layout.slot_of = {0, 1};
        return out;
    }
    const int kids_with = hh.agents[1].alive() ? 1 : 0;
    for (int i = 0; i < 2; ++i) {
        const auto& a = hh.agents[static_cast<std::size_t>(i)];
        if (!a.alive()) continue;
        auto& s = out[static_cast<std::size_t>(layout.units)];
        s.n_adults = 1;
        s.partnered = false;
        s.adults[0] = adult_snapshot(a);
        if (i == kids_with) set_children(s, hh);
        s.rent_mo = m.rules.rent_for(s.size());
        layout.unit_of[static_cast<std::size_t>(i)] = layout.units;
        layout.slot_of[static_cast<std::size_t>(i)] = 0;
        ++layout.units;
    }
    return out;
}

QuarterCash quarter_cash(const HouseholdState& hh, const Model& m) {
    QuarterCash q;
    const auto units = benefit_units(hh, m, q);
    for (int u = 0; u < q.units; ++u) {
        q.unit[static_cast<std::size_t>(u)] = rules::net_income(units[static_cast<std::size_t>(u)], m.rules);
    }
    for (int i = 0; i < 2; ++i) {
        const int u = q.unit_of[static_cast<std::size_t>(i)];
        if (u < 0 || !hh.agents[static_cast<std::size_t>(i)].alive()) continue;
        const int living = units[static_cast<std::size_t>(u)].living_adults();
        q.consumption[static_cast<std::size_t>(i)] = q.unit[static_cast<std::size_t>(u)].consumption / std::max(1, living);
    }
    return q;
}

EmploymentState apply_decision(HouseholdState& hh, int who, Action act, const Model& m) {
    auto& a = hh.agents[static_cast<std::size_t>(who)];
    if (!a.alive()) {
        if (act != Action::Stay) throw ContractViolation("apply_decision: the dead can only stay");
        return a.state;
    }
    const auto ctx = m.context(hh);
    if (!legal_mask(a, ctx)[static_cast<std::size_t>(act)]) {
        throw ContractViolation("apply_decision: illegal action " + std::string(to_string(act)) + " in state " +
                                std::string(short_name(a.state)));
    }
    const auto& fr = m.wage.friction;
    const int hours = action_hours(act);
    const S fallback = stay_target(a, m, ctx.child_under3);
    auto search = [&](bool ft) { return uniform01(hh.rng) < fr.probability(ft, a.gender, a.group, a.age); };
    auto keep_or_fallback = [&] {
        if (fallback == S::Retired && a.state != S::Retired) retire(a, m);
        if (fallback == S::EarningsRelatedUnemployed && a.state != fallback) start_unemployment(a, m.rules);
        enter_state(a, fallback, 0);
        if (is_working(fallback) && a.hours == 0) a.hours = fallback == S::FullTime ? 40 : 16;
    };

    switch (act) {
        case Action::Stay:
            keep_or_fallback();
            break;
        case Action::FullTime32:
        case Action::FullTime40:
        case Action::FullTime48:
            if (a.state == S::FullTime || (a.return_state == S::FullTime && fallback == S::FullTime)) {
                enter_state(a, S::FullTime, hours);
            } else if (search(true)) {
                enter_state(a, S::FullTime, hours);
            } else if (a.state != S::PartTime && uniform01(hh.rng) < fr.part_time_fallback) {
                enter_state(a, S::PartTime, 24);
            } else {
                keep_or_fallback();
            }
            break;
        case Action::PartTime8:
        case Action::PartTime16:
        case Action::PartTime24:
            if (a.state == S::PartTime || (a.return_state == S::PartTime && fallback == S::PartTime)) {
                enter_state(a, S::PartTime, hours);
            } else if (search(false)) {
                enter_state(a, S::PartTime, hours);
            } else {
                keep_or_fallback();
            }
            break;
        case Action::Quit:
            a.pink_slip = false;
            enter_state(a, S::LaborMarketSupport, 0);
            break;
        case Action::Retire:
            if (!is_pensioner(a.state)) retire(a, m);
            enter_state(a, S::Retired, 0);
            break;
        case Action::PartialEarly25:
        case Action::PartialEarly50: {
            const auto& p = m.rules.pension;
            const double share = act == Action::PartialEarly25 ? p.partial_early_shares.at(0) : p.partial_early_shares.at(1);
            const double months_early = std::max(0.0, (p.min_retirement_age - a.age) * 12.0);
            a.early_pension_share = share;
            a.partial_base = share * a.pension_accrued;
            a.partial_pension = a.partial_base * p.life_expectancy_coefficient *
                                std::max(0.0, 1.0 - p.partial_early_reduction_per_month * months_early);
            break;
        }
        case Action::HomeCare:
            enter_state(a, S::ChildHomeCare, 0);
            break;
        default: {
            // work while retired
            const S target = hours >= 32 ? S::RetiredFullTime : S::RetiredPartTime;
            if (a.state == S::RetiredPartTime || a.state == S::RetiredFullTime || search(hours >= 32)) {
                enter_state(a, target, hours);
            }
            break;
        }
    }
    return a.state;
}

std::optional<EmploymentState> exogenous_transition(HouseholdState& hh, int who, const Model& m, S quarter_start,
                                                    bool birth) {
    auto& a = hh.agents[static_cast<std::size_t>(who)];
    if (!a.alive()) return std::nullopt;
    const auto& rates = m.demo.rates;
    const auto g = static_cast<std::size_t>(index_of(a.gender));
    const auto grp = static_cast<std::size_t>(a.group);
    const double min_ret = m.min_retirement_age();
    const S s = a.state;
    std::optional<S> out;
    auto propose = [&](S to) {
        if (out || to == s) return false;
        if (!is_legal_move(s, to)) return false;
        if (quarter_start != s && quarter_start != to && !is_legal_move(quarter_start, to)) return false;
        out = to;
        return true;
    };
    auto geometric = [&](double p) { return pop::draw_clock(pop::AgeHazard{{p}}, a.age, hh.rng); };

    // clocks always advance
    bool spell_over = false;
    if (a.spell_left > 0 && --a.spell_left == 0) spell_over = true;
    bool disability_fires = false, outsider_fires = false, student_fires = false;
    if (a.until_disability != kNever && --a.until_disability <= 0) disability_fires = true;
    if (a.until_outsider != kNever && --a.until_outsider <= 0) outsider_fires = true;
    if (a.until_student != kNever && --a.until_student <= 0) student_fires = true;
    if (s == S::SickLeave) ++a.sick_quarters;

    if (birth) {
        const bool mother = a.gender == Gender::Female;
        const bool father_takes = !mother && hh.partnered && uniform01(hh.rng) < rates.fathers_leave_prob;
        if (mother || father_takes) {
            const S leave = mother ? S::MothersLeave : S::FathersLeave;
            const S ret = (s == S::MothersLeave || s == S::FathersLeave) ? a.return_state : s;
            if (propose(leave) || s == leave) {
                a.return_state = ret;
                a.spell_left = mother ? rates.mothers_leave_quarters : rates.fathers_leave_quarters;
            }
        }
    }
    if ((s == S::Disabled || s == S::SickLeave) && a.age >= min_ret) propose(S::Retired);
    if (s == S::SickLeave && a.sick_quarters == kQuartersPerYear && uniform01(hh.rng) < rates.disability_after_sick) {
        propose(S::Disabled);
    }
    if (disability_fires) {
        if (a.age < min_ret) propose(S::Disabled);
        a.until_disability = kNever;
    }
    if (spell_over && (s == S::OutsideWorkforce || s == S::Student)) propose(S::LaborMarketSupport);
    if ((s == S::EarningsRelatedUnemployed) && a.er_days_used >= a.er_max_days && a.unemp_wage_basis > 0.0 &&
        m.rules.er.extended_benefit && a.age >= m.rules.er.extended_min_age &&
        a.career_years >= m.rules.er.extended_career_years && a.age < min_ret) {
        if (propose(S::ExtendedUnemployed)) {
            a.er_days_used = std::min(a.er_days_used, a.er_max_days);
        }
    }
    if (is_working(s) && !is_pensioner(s) && uniform01(hh.rng) < rates.layoff.at(a.age) *
                                                                     (s == S::PartTime ? rates.part_time_layoff_factor : 1.0)) {
        if (propose(S::EarningsRelatedUnemployed)) a.pink_slip = true;
    }
    const bool can_get_sick = s == S::FullTime || s == S::PartTime || s == S::EarningsRelatedUnemployed ||
                              s == S::ExtendedUnemployed || s == S::LaborMarketSupport || s == S::ChildHomeCare ||
                              s == S::OutsideWorkforce;
    if (can_get_sick && a.age < min_ret && uniform01(hh.rng) < rates.sick_onset[g][grp]) {
        if (propose(S::SickLeave)) {
            a.return_state = s == S::OutsideWorkforce ? S::LaborMarketSupport : s;
            a.spell_left = geometric(rates.sick_recovery);
            a.sick_quarters = 0;
        }
    }
    if (outsider_fires) {
        if (a.age < min_ret && propose(S::OutsideWorkforce)) a.spell_left = geometric(rates.outsider_exit);
        a.until_outsider = pop::draw_clock(rates.outsider[g], a.age, hh.rng);
    }
    if (student_fires) {
        if (a.age < min_ret && propose(S::Student)) a.spell_left = geometric(rates.student_exit);
        a.until_student = pop::draw_clock(rates.student, a.age, hh.rng);
    }
    return out;
}

namespace {

void apply_exogenous(AgentState& a, S to, const Model& m) {
    if (to == S::EarningsRelatedUnemployed) start_unemployment(a, m.rules);
    if (to == S::Retired) {
        if (a.state != S::Disabled) a.pension_paid = retirement_pension(a, m);
    }
    if (to == S::Disabled) {
        const auto& p = m.rules.pension;
        const double years_left = std::max(0.0, p.min_retirement_age - a.age);
        a.pension_paid = a.pension_accrued + p.accrual_rate * a.wage_basis * years_left;
        a.partial_pension = 0.0;
    }
    if (to == S::MothersLeave || to == S::FathersLeave || to == S::SickLeave) {
        // return_state was set by the caller; a job held before the spell is kept
        enter_state(a, to, 0);
        return;
    }
    if (to == S::LaborMarketSupport || to == S::OutsideWorkforce || to == S::Student) a.return_state = S::LaborMarketSupport;
    enter_state(a, to, 0);
}

// Quarter bookkeeping after cash flows: accruals, benefit days, histories, wages.
void advance_agent(AgentState& a, HouseholdState& hh, const Model& m) {
    if (!a.alive()) return;
    const auto& r = m.rules;
    const double wage_mo = annual_to_monthly(a.paid_wage);
    const bool worked = is_working(a.state) && a.hours >= r.er.employment_condition_min_hours;

    if (is_working(a.state)) {
        if (is_pensioner(a.state)) {
            a.pension_paid += r.pension.accrual_rate * wage_mo * kQuarter;
        } else {
            a.pension_accrued += r.pension.accrual_rate * wage_mo * kQuarter;
        }
        a.wage_basis = a.wage_basis > 0.0 ? 0.75 * a.wage_basis + 0.25 * wage_mo : wage_mo;
        a.career_years += kQuarter;
    } else if (receives_er(a) || a.state == S::SickLeave || a.state == S::MothersLeave || a.state == S::FathersLeave) {
        const double basis = receives_er(a) ? a.unemp_wage_basis : a.wage_basis;
        a.pension_accrued += r.pension.accrual_rate * r.pension.unemployment_accrual_share * basis * kQuarter;
    }
    if (receives_er(a) && a.state == S::EarningsRelatedUnemployed) {
        a.er_days_used = std::min(a.er_max_days, a.er_days_used + static_cast<int>(rules::kBenefitDaysPerQuarter));
    }
    a.er_days_left = std::max(0, a.er_max_days - a.er_days_used);
    a.work_history = static_cast<std::uint16_t>((a.work_history << 1) | (worked ? 1u : 0u));

    const auto& wp = m.wage.params;
    a.previous_wage = a.paid_wage;
    a.wage_reduction = wage::update_wage_reduction(a.wage_reduction, a.state, kQuarter, wp);
    a.potential_wage = wage::potential_wage_step(a.potential_wage, wp.average_wage(a.gender, a.group, a.age),
                                                 wp.average_wage(a.gender, a.group, a.age + kQuarter),
                                                 standard_normal(hh.rng), wp, kQuarter);
    a.time_in_state += kQuarter;
    a.age += kQuarter;
}

void refresh_derived(AgentState& a, const Model& m) {
    const auto& r = m.rules;
    a.employment_condition = employment_condition_met(a, r);
    if (a.age >= r.er.senior_age && a.age < r.er.senior_age + kQuarter) {
        a.condition_at_58 = a.employment_condition;
    }
    if (a.alive() && is_working(a.state)) {
        a.paid_wage = wage::paid_wage(a.potential_wage, a.wage_reduction, a.hours);
    } else {
        a.paid_wage = 0.0;
    }
    a.unemp_wage = wage::paid_wage(a.potential_wage, a.wage_reduction, 40);
    a.unemployed_past_ret_age = is_unemployed(a.state) && a.age >= r.pension.min_retirement_age;
    a.basic_pension = is_pensioner(a.state) ? rules::pension_benefit(a.pension_paid, r).basic : 0.0;
}

}  // namespace

StepResult step(HouseholdState& hh, const std::array<Action, 2>& actions, const Model& m, TransitionAudit* audit,
                const QuarterCallback& on_quarter) {
    StepResult res;
    std::array<S, 2> start{hh.agents[0].state, hh.agents[1].state};

    for (int i = 0; i < 2; ++i) {
        auto& a = hh.agents[static_cast<std::size_t>(i)];
        const S before = a.state;
        const S after = apply_decision(hh, i, actions[static_cast<std::size_t>(i)], m);
        if (is_working(after)) a.paid_wage = wage::paid_wage(a.potential_wage, a.wage_reduction, a.hours);
        else a.paid_wage = 0.0;
        res.decided[static_cast<std::size_t>(i)] = after;
        if (audit && a.alive()) audit->record_decision(before, after);
    }

    res.cash = quarter_cash(hh, m);
    if (on_quarter) on_quarter(hh, res.cash);
    const bool under3 = hh.children_under3() > 0;
    for (int i = 0; i < 2; ++i) {
        const auto& a = hh.agents[static_cast<std::size_t>(i)];
        res.reward[static_cast<std::size_t>(i)] =
            utility(a, res.cash.consumption[static_cast<std::size_t>(i)], under3, m.min_retirement_age(),
                    m.deflator(), m.utility);
    }

    for (auto& a : hh.agents) advance_agent(a, hh, m);
    ++hh.quarter;

    pop::mortality_step(hh, m.demo);
    pop::partnership_step(hh, m.demo);
    const bool birth = pop::fertility_step(hh, m.demo);

    for (int i = 0; i < 2; ++i) {
        auto& a = hh.agents[static_cast<std::size_t>(i)];
        if (!a.alive()) {
            if (audit && start[static_cast<std::size_t>(i)] != S::Dead) {
                audit->record_exogenous(res.decided[static_cast<std::size_t>(i)], S::Dead);
                audit->record_quarter(start[static_cast<std::size_t>(i)], S::Dead);
            }
            a.paid_wage = 0.0;
            continue;
        }
        const S before = a.state;
        if (auto to = exogenous_transition(hh, i, m, start[static_cast<std::size_t>(i)], birth)) {
            apply_exogenous(a, *to, m);
        }
        refresh_derived(a, m);
        if (audit) {
            audit->record_exogenous(before, a.state);
            audit->record_quarter(start[static_cast<std::size_t>(i)], a.state);
        }
    }

    if (hh.age() >= kDecisionEndAge) {
        res.done = true;
        const auto st = static_phase(hh, m, on_quarter);
        const double disc = m.utility.step_discount();
        for (int i = 0; i < 2; ++i) {
            res.terminal_value[static_cast<std::size_t>(i)] = st.value[static_cast<std::size_t>(i)];
            res.reward[static_cast<std::size_t>(i)] += disc * st.value[static_cast<std::size_t>(i)];
        }
    }
    return res;
}

StaticResult static_phase(HouseholdState hh, const Model& m, const QuarterCallback& on_quarter) {
    StaticResult out;
    for (auto& a : hh.agents) {
        if (!a.alive()) continue;
        if (!is_pensioner(a.state) || a.state == S::RetiredPartTime || a.state == S::RetiredFullTime) {
            if (!is_pensioner(a.state)) a.pension_paid = retirement_pension(a, m);
            a.partial_pension = 0.0;
            enter_state(a, S::Retired, 0);
        }
        if (a.state == S::Disabled) enter_state(a, S::Retired, 0);
        a.paid_wage = 0.0;
        a.basic_pension = rules::pension_benefit(a.pension_paid, m.rules).basic;
    }
    const double disc = m.utility.step_discount();
    double w = 1.0;
    while (hh.age() < kEndAge && (hh.agents[0].alive() || hh.agents[1].alive())) {
        const auto cash = quarter_cash(hh, m);
        if (on_quarter) on_quarter(hh, cash);
        const bool under3 = hh.children_under3() > 0;
        for (int i = 0; i < 2; ++i) {
            const auto& a = hh.agents[static_cast<std::size_t>(i)];
            if (!a.alive()) continue;
            out.value[static_cast<std::size_t>(i)] +=
                w * utility(a, cash.consumption[static_cast<std::size_t>(i)], under3, m.min_retirement_age(),
                            m.deflator(), m.utility);
            if (const auto* f = cash.adult_flows(i)) {
                out.pension_paid += (*f)[rules::Benefit::EarningsPension] + (*f)[rules::Benefit::NationalPension] +
                                    (*f)[rules::Benefit::GuaranteePension];
            }
        }
        for (auto& a : hh.agents) {
            if (!a.alive()) continue;
            a.age += kQuarter;
            a.time_in_state += kQuarter;
        }
        ++hh.quarter;
        ++out.quarters;
        w *= disc;
        for (auto& a : hh.agents) {
            if (!a.alive()) continue;
            if (--a.life_left <= 0) {
                a.life_left = 0;
                a.state = S::Dead;
                a.hours = 0;
            }
        }
        int kept = 0;
        for (int c = 0; c < hh.n_children; ++c) {
            const int age_q = hh.child_age_q[static_cast<std::size_t>(c)] + 1;
            if (age_q < 18 * kQuartersPerYear) hh.child_age_q[static_cast<std::size_t>(kept++)] = age_q;
        }
        hh.n_children = kept;
    }
    return out;
}

}  // namespace lcm::env
