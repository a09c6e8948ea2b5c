#include "lcm/population/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lcm/common/errors.hpp"

namespace lcm {

void to_json(Json& j, const Rng& r) { j = r.state(); }
void from_json(const Json& j, Rng& r) { r.set_state(j.get<std::array<std::uint64_t, 4>>()); }

namespace env {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(AgentState, gender, group, age, state, return_state, hours, time_in_state,
                                   potential_wage, previous_wage, paid_wage, wage_reduction, wage_basis, pink_slip,
                                   career_years, early_pension_share, partial_pension, partial_base, pension_accrued,
                                   pension_paid, basic_pension, work_history, employment_condition, condition_at_58,
                                   new_condition, er_began_age, fund_member, er_days_left, er_days_used, er_max_days,
                                   unemp_wage_basis, unemp_wage, unemployed_past_ret_age, until_disability,
                                   until_student, until_outsider, life_left, spell_left, sick_quarters)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(HouseholdState, agents, partnered, n_children, child_age_q, until_birth,
                                   until_marriage, until_divorce, quarter, id, rng)

}  // namespace env

namespace population {

using env::HouseholdState;
using env::kNever;
using S = EmploymentState;

double AgeHazard::at(double age) const {
    if (q.empty()) return 0.0;
    const int idx = std::clamp(static_cast<int>(std::floor(age)) - kStartAge, 0, static_cast<int>(q.size()) - 1);
    return q[static_cast<std::size_t>(idx)];
}

namespace {

void check_prob(double v, const std::string& what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("demographics: probability out of [0,1]: " + what);
}

void check_hazard(const AgeHazard& h, const std::string& what) {
    if (h.q.empty()) throw ConfigError("demographics: empty hazard table: " + what);
    for (double v : h.q) check_prob(v, what);
}

AgeHazard hazard_from_json(const Json& j, const char* key) {
    return AgeHazard{require_number_array(j, key, "demographics")};
}

std::array<double, 3> triple(const Json& j, const char* key, const std::string& ctx) {
    const auto v = require_number_array(j, key, ctx);
    if (v.size() != 3) throw ConfigError(ctx + "." + key + ": expected 3 values");
    return {v[0], v[1], v[2]};
}

int pick(const double* w, int n, double u) {
    const double total = std::accumulate(w, w + n, 0.0);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += w[i] / total;
        if (u < acc) return i;
    }
    for (int i = n - 1; i >= 0; --i) {
        if (w[i] > 0.0) return i;
    }
    return n - 1;
}

double marriage_factor(const HouseholdState& hh, const DemographicTables& t) {
    return t.pairing_weight[static_cast<std::size_t>(hh.agents[0].group)][static_cast<std::size_t>(hh.agents[1].group)];
}

void draw_marriage_clock(HouseholdState& hh, const DemographicTables& t) {
    const bool both = hh.agents[0].alive() && hh.agents[1].alive();
    hh.until_marriage = both ? draw_clock(t.marriage, hh.agents[1].age, hh.rng, marriage_factor(hh, t)) : kNever;
}

}  // namespace

void DemographicTables::validate() const {
    for (int g = 0; g < 2; ++g) {
        double s = 0.0;
        for (double v : group_shares[static_cast<std::size_t>(g)]) {
            check_prob(v, "group_shares");
            s += v;
        }
        if (!(s > 0.0 && s <= 1.0 + 1e-9)) throw ConfigError("demographics: group shares must sum to (0, 1]");
        double d = 0.0;
        for (double v : initial_states[static_cast<std::size_t>(g)]) {
            check_prob(v, "initial_states");
            d += v;
        }
        if (std::abs(d - 1.0) > 1e-9) throw ConfigError("demographics: initial state distribution must sum to 1");
        check_hazard(mortality[static_cast<std::size_t>(g)], "mortality");
        check_hazard(rates.outsider[static_cast<std::size_t>(g)], "outsider");
        for (double v : rates.sick_onset[static_cast<std::size_t>(g)]) check_prob(v, "sick_onset");
    }
    check_hazard(marriage, "marriage");
    check_hazard(divorce, "divorce");
    check_hazard(fertility, "fertility");
    check_hazard(rates.layoff, "layoff");
    check_hazard(rates.disability, "disability");
    check_hazard(rates.student, "student");
    check_prob(single_fertility_factor, "single_fertility_factor");
    check_prob(rates.sick_recovery, "sick_recovery");
    check_prob(rates.disability_after_sick, "disability_after_sick");
    check_prob(rates.outsider_exit, "outsider_exit");
    check_prob(rates.student_exit, "student_exit");
    check_prob(rates.fathers_leave_prob, "fathers_leave_prob");
    for (double v : rates.fund_member_share) check_prob(v, "fund_member_share");
    for (const auto& row : pairing_weight) {
        for (double w : row) {
            if (!(w >= 0.0)) throw ConfigError("demographics: pairing weights must be >= 0");
        }
    }
    if (rates.mothers_leave_quarters < 1 || rates.fathers_leave_quarters < 1) {
        throw ConfigError("demographics: leave lengths must be >= 1 quarter");
    }
}

DemographicTables tables_from_json(const Json& doc) {
    DemographicTables t;
    try {
        const auto& gs = doc.at("group_shares");
        t.group_shares[0] = triple(gs, "male", "group_shares");
        t.group_shares[1] = triple(gs, "female", "group_shares");
        t.marriage = hazard_from_json(doc, "marriage_hazard");
        t.divorce = hazard_from_json(doc, "divorce_hazard");
        t.fertility = hazard_from_json(doc, "fertility_hazard");
        t.single_fertility_factor = require_number(doc, "single_fertility_factor", "demographics");
        t.mortality[0] = AgeHazard{require_number_array(doc.at("mortality_hazard"), "male", "mortality_hazard")};
        t.mortality[1] = AgeHazard{require_number_array(doc.at("mortality_hazard"), "female", "mortality_hazard")};
        const auto& pw = doc.at("pairing_weight");
        if (!pw.is_array() || pw.size() != 3) throw ConfigError("pairing_weight: expected 3x3");
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t k = 0; k < 3; ++k) t.pairing_weight[i][k] = pw.at(i).at(k).get<double>();
        }
        const auto& init = doc.at("initial_states");
        for (int g = 0; g < 2; ++g) {
            const auto& m = init.at(g == 0 ? "male" : "female");
            auto& row = t.initial_states[static_cast<std::size_t>(g)];
            row.fill(0.0);
            for (const auto& [key, val] : m.items()) {
                const auto s = parse_employment_state(key);
                if (!s) throw ConfigError("initial_states: unknown state " + key);
                row[static_cast<std::size_t>(index_of(*s))] = val.get<double>();
            }
        }
        const auto& r = doc.at("exogenous");
        const std::string c = "exogenous";
        t.rates.layoff = hazard_from_json(r, "layoff_hazard");
        t.rates.part_time_layoff_factor = require_number(r, "part_time_layoff_factor", c);
        t.rates.sick_onset[0] = triple(r.at("sick_onset"), "male", "sick_onset");
        t.rates.sick_onset[1] = triple(r.at("sick_onset"), "female", "sick_onset");
        t.rates.sick_recovery = require_number(r, "sick_recovery", c);
        t.rates.disability_after_sick = require_number(r, "disability_after_sick", c);
        t.rates.disability = hazard_from_json(r, "disability_hazard");
        t.rates.outsider[0] = AgeHazard{require_number_array(r.at("outsider_hazard"), "male", "outsider_hazard")};
        t.rates.outsider[1] = AgeHazard{require_number_array(r.at("outsider_hazard"), "female", "outsider_hazard")};
        t.rates.outsider_exit = require_number(r, "outsider_exit", c);
        t.rates.student = hazard_from_json(r, "student_hazard");
        t.rates.student_exit = require_number(r, "student_exit", c);
        t.rates.initial_study_years = triple(r, "initial_study_years", c);
        t.rates.mothers_leave_quarters = static_cast<int>(require_number(r, "mothers_leave_quarters", c));
        t.rates.fathers_leave_prob = require_number(r, "fathers_leave_prob", c);
        t.rates.fathers_leave_quarters = static_cast<int>(require_number(r, "fathers_leave_quarters", c));
        t.rates.fund_member_share = triple(r, "fund_member_share", c);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("demographics: ") + e.what());
    }
    t.validate();
    return t;
}

Json to_json(const DemographicTables& t) {
    Json init = Json::object();
    for (int g = 0; g < 2; ++g) {
        Json m = Json::object();
        for (int s = 0; s < kEmploymentStateCount; ++s) {
            const double v = t.initial_states[static_cast<std::size_t>(g)][static_cast<std::size_t>(s)];
            if (v > 0.0) m[std::string(short_name(static_cast<S>(s)))] = v;
        }
        init[g == 0 ? "male" : "female"] = m;
    }
    const auto& r = t.rates;
    return Json{
        {"group_shares", {{"male", t.group_shares[0]}, {"female", t.group_shares[1]}}},
        {"marriage_hazard", t.marriage.q},
        {"divorce_hazard", t.divorce.q},
        {"fertility_hazard", t.fertility.q},
        {"single_fertility_factor", t.single_fertility_factor},
        {"mortality_hazard", {{"male", t.mortality[0].q}, {"female", t.mortality[1].q}}},
        {"pairing_weight", t.pairing_weight},
        {"initial_states", init},
        {"exogenous",
         {{"layoff_hazard", r.layoff.q},
          {"part_time_layoff_factor", r.part_time_layoff_factor},
          {"sick_onset", {{"male", r.sick_onset[0]}, {"female", r.sick_onset[1]}}},
          {"sick_recovery", r.sick_recovery},
          {"disability_after_sick", r.disability_after_sick},
          {"disability_hazard", r.disability.q},
          {"outsider_hazard", {{"male", r.outsider[0].q}, {"female", r.outsider[1].q}}},
          {"outsider_exit", r.outsider_exit},
          {"student_hazard", r.student.q},
          {"student_exit", r.student_exit},
          {"initial_study_years", r.initial_study_years},
          {"mothers_leave_quarters", r.mothers_leave_quarters},
          {"fathers_leave_prob", r.fathers_leave_prob},
          {"fathers_leave_quarters", r.fathers_leave_quarters},
          {"fund_member_share", r.fund_member_share}}}};
}

DemographicTables load_tables(const std::filesystem::path& path) {
    try {
        return tables_from_json(load_json_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

int draw_clock(const AgeHazard& h, double age, Rng& rng, double factor) {
    const int horizon = static_cast<int>(std::ceil((kEndAge - age) * kQuartersPerYear));
    for (int k = 1; k <= horizon; ++k) {
        const double p = std::min(1.0, factor * h.at(age + (k - 1) * kQuarter));
        if (p > 0.0 && uniform01(rng) < p) return k;
    }
    return kNever;
}

int draw_life_left(const AgeHazard& h, double age, Rng& rng) {
    const int k = draw_clock(h, age, rng);
    if (k != kNever) return k;
    return std::max(1, static_cast<int>(std::ceil((kEndAge - age) * kQuartersPerYear)));
}

void redraw_birth_clock(HouseholdState& hh, const DemographicTables& t) {
    if (!hh.agents[1].alive()) {
        hh.until_birth = kNever;
        return;
    }
    const bool couple = hh.partnered && hh.agents[0].alive();
    hh.until_birth = draw_clock(t.fertility, hh.agents[1].age, hh.rng, couple ? 1.0 : t.single_fertility_factor);
}

CohortPopulation init_population(int n, const DemographicTables& t, std::uint64_t seed) {
    if (n < 1) throw ConfigError("init_population: n must be >= 1");
    CohortPopulation pop;
    pop.seed = seed;
    pop.households.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        HouseholdState& hh = pop.households[static_cast<std::size_t>(i)];
        hh.id = static_cast<std::uint64_t>(i);
        hh.rng = Rng(derive_seed(seed, 0x706f70ULL, hh.id));
        for (int g = 0; g < 2; ++g) {
            auto& a = hh.agents[static_cast<std::size_t>(g)];
            a.gender = static_cast<Gender>(g);
            a.age = kStartAge;
            a.group = pick(t.group_shares[static_cast<std::size_t>(g)].data(), 3, uniform01(hh.rng));
            a.state = static_cast<S>(pick(t.initial_states[static_cast<std::size_t>(g)].data(), kEmploymentStateCount,
                                          uniform01(hh.rng)));
            a.return_state = S::LaborMarketSupport;
            a.hours = a.state == S::FullTime ? 40 : (a.state == S::PartTime ? 16 : 0);
            a.fund_member = uniform01(hh.rng) < t.rates.fund_member_share[static_cast<std::size_t>(a.group)];
            if (a.state == S::Student) {
                const double mean_q = t.rates.initial_study_years[static_cast<std::size_t>(a.group)] * kQuartersPerYear;
                a.spell_left = draw_clock(AgeHazard{{1.0 / mean_q}}, a.age, hh.rng);
            } else if (a.state == S::OutsideWorkforce) {
                a.spell_left = draw_clock(AgeHazard{{t.rates.outsider_exit}}, a.age, hh.rng);
            }
            a.life_left = draw_life_left(t.mortality[static_cast<std::size_t>(g)], a.age, hh.rng);
            a.until_disability = draw_clock(t.rates.disability, a.age, hh.rng);
            a.until_outsider = draw_clock(t.rates.outsider[static_cast<std::size_t>(g)], a.age, hh.rng);
            a.until_student = draw_clock(t.rates.student, a.age, hh.rng);
        }
        hh.partnered = false;
        draw_marriage_clock(hh, t);
        hh.until_divorce = kNever;
        redraw_birth_clock(hh, t);
    }
    return pop;
}

bool mortality_step(HouseholdState& hh, const DemographicTables& t) {
    bool died = false;
    for (auto& a : hh.agents) {
        if (!a.alive()) continue;
        if (--a.life_left <= 0) {
            a.life_left = 0;
            a.state = S::Dead;
            a.hours = 0;
            a.paid_wage = 0.0;
            died = true;
        }
    }
    if (died) {
        hh.until_marriage = kNever;
        hh.until_divorce = kNever;
        redraw_birth_clock(hh, t);
    }
    return died;
}

void partnership_step(HouseholdState& hh, const DemographicTables& t) {
    if (!hh.agents[0].alive() || !hh.agents[1].alive()) return;
    if (!hh.partnered) {
        if (hh.until_marriage != kNever && --hh.until_marriage <= 0) {
            hh.partnered = true;
            hh.until_marriage = kNever;
            hh.until_divorce = draw_clock(t.divorce, hh.agents[1].age, hh.rng);
            redraw_birth_clock(hh, t);
        }
    } else if (hh.until_divorce != kNever && --hh.until_divorce <= 0) {
        hh.partnered = false;
        hh.until_divorce = kNever;
        draw_marriage_clock(hh, t);
        redraw_birth_clock(hh, t);
    }
}

bool fertility_step(HouseholdState& hh, const DemographicTables& t) {
    int kept = 0;
    for (int i = 0; i < hh.n_children; ++i) {
        const int a = hh.child_age_q[static_cast<std::size_t>(i)] + 1;
        if (a < 18 * kQuartersPerYear) hh.child_age_q[static_cast<std::size_t>(kept++)] = a;
    }
    for (int i = kept; i < hh.n_children; ++i) hh.child_age_q[static_cast<std::size_t>(i)] = 0;
    hh.n_children = kept;

    if (!hh.agents[1].alive() || hh.until_birth == kNever) return false;
    if (--hh.until_birth > 0) return false;
    bool born = false;
    if (hh.n_children < env::kMaxChildren) {
        hh.child_age_q[static_cast<std::size_t>(hh.n_children++)] = 0;
        born = true;
    }
    redraw_birth_clock(hh, t);
    return born;
}

void mortality_step(CohortPopulation& pop, const DemographicTables& t) {
    const auto n = static_cast<std::ptrdiff_t>(pop.households.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) mortality_step(pop.households[static_cast<std::size_t>(i)], t);
}

void partnership_step(CohortPopulation& pop, const DemographicTables& t) {
    for (auto& hh : pop.households) partnership_step(hh, t);
}

void fertility_step(CohortPopulation& pop, const DemographicTables& t) {
    const auto n = static_cast<std::ptrdiff_t>(pop.households.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) fertility_step(pop.households[static_cast<std::size_t>(i)], t);
}

Json to_json(const env::AgentState& a) { return Json(a); }
Json to_json(const env::HouseholdState& h) { return Json(h); }
env::HouseholdState household_from_json(const Json& j) { return j.get<env::HouseholdState>(); }

Json to_json(const CohortPopulation& pop) {
    Json hs = Json::array();
    for (const auto& h : pop.households) hs.push_back(Json(h));
    return Json{{"seed", pop.seed}, {"households", hs}};
}

CohortPopulation population_from_json(const Json& j) {
    CohortPopulation pop;
    pop.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& h : j.at("households")) pop.households.push_back(household_from_json(h));
    return pop;
}

}  // namespace population
}  // namespace lcm
