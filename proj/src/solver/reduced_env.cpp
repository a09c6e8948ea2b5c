#include "lcm/solver/reduced_env.hpp"

#include <algorithm>
#include <cmath>

#include "lcm/common/errors.hpp"
#include "lcm/rules/engine.hpp"

namespace lcm::solver {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

constexpr std::array<EmploymentState, ReducedModel::kEmp> kStates{
    EmploymentState::FullTime, EmploymentState::PartTime, EmploymentState::EarningsRelatedUnemployed,
    EmploymentState::LaborMarketSupport, EmploymentState::Retired};

constexpr int kDaysPerQuarter = 65;

}  // namespace

ReducedModel::ReducedModel(const env::Model& m, ReducedSpec spec) : spec_(spec) {
    if (spec_.wage_points < 2 || spec_.wage_span <= 0.0) throw ConfigError("reduced env: bad wage grid");
    if (!is_valid_hours(spec_.pt_hours)) throw ConfigError("reduced env: bad part-time hours");
    T_ = static_cast<int>((75.0 - 18.0) * 4.0);
    nz_ = spec_.wage_points;
    nd_ = std::max(1, m.rules.er.max_days_standard / kDaysPerQuarter);
    gamma_ = m.utility.step_discount();
    min_ret_ = m.min_retirement_age();
    pt_fallback_ = m.wage.friction.part_time_fallback;

    const double rho = m.wage.params.rho(0.25);
    const double sig = m.wage.params.sigma_step(0.25);
    const double sd = sig / std::sqrt(1.0 - rho * rho);
    const double h = 2.0 * spec_.wage_span * sd / (nz_ - 1);
    zgrid_.resize(static_cast<std::size_t>(nz_));
    for (int i = 0; i < nz_; ++i) zgrid_[static_cast<std::size_t>(i)] = -spec_.wage_span * sd + i * h;
    ztrans_.assign(static_cast<std::size_t>(nz_), std::vector<double>(static_cast<std::size_t>(nz_), 0.0));
    for (int i = 0; i < nz_; ++i) {
        const double mu = rho * zgrid_[static_cast<std::size_t>(i)];
        for (int j = 0; j < nz_; ++j) {
            const double hi = j == nz_ - 1 ? 1.0 : normal_cdf((zgrid_[static_cast<std::size_t>(j)] + h / 2 - mu) / sig);
            const double lo = j == 0 ? 0.0 : normal_cdf((zgrid_[static_cast<std::size_t>(j)] - h / 2 - mu) / sig);
            ztrans_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = hi - lo;
        }
    }

    const auto& ex = m.demo.rates;
    const auto& fr = m.wage.friction;
    for (int t = 0; t < T_; ++t) {
        const double a = age(t);
        layoff_ft_.push_back(std::clamp(ex.layoff.at(a), 0.0, 1.0));
        layoff_pt_.push_back(std::clamp(ex.layoff.at(a) * ex.part_time_layoff_factor, 0.0, 1.0));
        find_ft_.push_back(fr.probability(true, spec_.gender, spec_.group, a));
        find_pt_.push_back(fr.probability(false, spec_.gender, spec_.group, a));
    }

    // Period utilities for every (t, e, z, d).
    const auto& r = m.rules;
    const double D = m.deflator();
    const double rent = r.rent_for(1);
    const double career_base = m.wage.params.average_wage(spec_.gender, spec_.group, 60.0);
    u_.assign(static_cast<std::size_t>(T_) * kEmp * nz_ * nd_, 0.0);
    for (int t = 0; t < T_; ++t) {
        const double a = age(t);
        const double avg = m.wage.params.average_wage(spec_.gender, spec_.group, a);
        for (int e = 0; e < kEmp; ++e) {
            for (int z = 0; z < nz_; ++z) {
                const double w = avg * std::exp(zgrid_[static_cast<std::size_t>(z)]);
                for (int d = 0; d < nd_; ++d) {
                    rules::HouseholdSnapshot hh;
                    hh.n_adults = 1;
                    hh.rent_mo = rent;
                    auto& ad = hh.adults[0];
                    ad.state = kStates[static_cast<std::size_t>(e)];
                    ad.gender = spec_.gender;
                    ad.age = a;
                    ad.max_benefit_days = r.er.max_days_standard;
                    env::AgentState st;
                    st.state = ad.state;
                    st.gender = spec_.gender;
                    st.group = spec_.group;
                    st.age = a;
                    if (e == FT || e == PT) {
                        st.hours = e == FT ? 40 : spec_.pt_hours;
                        ad.wage_q = wage::paid_wage(w, 0.0, st.hours) * 0.25;
                    } else if (e == Un) {
                        st.pink_slip = true;  // Un is only reached through a layoff here
                        ad.benefit_basis_mo = w / 12.0;
                        ad.benefit_days_used = d * kDaysPerQuarter;
                    } else if (e == Re) {
                        // Full-career pension from the age-60 wage on the agent's grid point.
                        const double accrued = r.pension.accrual_rate * 40.0 * career_base *
                                               std::exp(zgrid_[static_cast<std::size_t>(z)]) / 12.0;
                        ad.accrued_pension_mo = accrued;
                        ad.pension_paid_mo = accrued * r.pension.life_expectancy_coefficient;
                    }
                    const auto cf = rules::net_income(hh, r);
                    u_[((static_cast<std::size_t>(t) * kEmp + static_cast<std::size_t>(e)) * nz_ +
                        static_cast<std::size_t>(z)) * nd_ + static_cast<std::size_t>(d)] =
                        env::utility(st, cf.consumption, false, min_ret_, D, m.utility);
                }
            }
        }
    }

    std::vector<double> pz(static_cast<std::size_t>(nz_), 1.0 / nz_);
    for (int it = 0; it < 5000; ++it) {
        std::vector<double> nx(static_cast<std::size_t>(nz_), 0.0);
        for (int i = 0; i < nz_; ++i) {
            for (int j = 0; j < nz_; ++j) nx[static_cast<std::size_t>(j)] += pz[static_cast<std::size_t>(i)] * ztrans_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        pz = std::move(nx);
    }
    start_.assign(static_cast<std::size_t>(state_count()), 0.0);
    double total = 0.0;
    for (double v : spec_.start_share) total += v;
    if (!(total > 0.0)) throw ConfigError("reduced env: empty start distribution");
    for (int e = 0; e < kEmp; ++e) {
        for (int z = 0; z < nz_; ++z) {
            start_[static_cast<std::size_t>(index(e, z, 0))] = spec_.start_share[static_cast<std::size_t>(e)] / total * pz[static_cast<std::size_t>(z)];
        }
    }
}

bool ReducedModel::legal(int t, int s, int a) const {
    const int e = emp(s);
    if (e == Re) return a == Stay;
    switch (a) {
        case Stay: return true;
        case SeekFullTime: return e != FT;
        case SeekPartTime: return e != PT;
        case Quit: return e == FT;
        case Retire: return age(t) >= min_ret_;
        default: return false;
    }
}

void ReducedModel::decision_outcomes(int t, int s, int a, std::vector<Transition>& out) const {
    if (!legal(t, s, a)) throw ContractViolation("reduced env: illegal action");
    const int e = emp(s);
    out.clear();
    switch (a) {
        case Stay:
            out.push_back({e, 1.0});
            break;
        case SeekFullTime: {
            const double p = find_ft_[static_cast<std::size_t>(t)];
            out.push_back({FT, p});
            if (e == PT) {
                out.push_back({PT, 1.0 - p});
            } else {
                const double q = (1.0 - p) * pt_fallback_;
                out.push_back({PT, q});
                out.push_back({e, 1.0 - p - q});
            }
            break;
        }
        case SeekPartTime: {
            const double p = find_pt_[static_cast<std::size_t>(t)];
            out.push_back({PT, p});
            out.push_back({e, 1.0 - p});
            break;
        }
        case Quit:
            out.push_back({Lm, 1.0});
            break;
        case Retire:
            out.push_back({Re, 1.0});
            break;
    }
}

double ReducedModel::period_utility(int t, int e, int z, int d) const {
    return u_[((static_cast<std::size_t>(t) * kEmp + static_cast<std::size_t>(e)) * nz_ + static_cast<std::size_t>(z)) *
                  nd_ + static_cast<std::size_t>(d)];
}

void ReducedModel::exogenous(int t, int e, int z, int d, std::vector<Transition>& out) const {
    out.clear();
    if (e == Re) {
        out.push_back({index(Re, z, 0), 1.0});
        return;
    }
    const auto& row = ztrans_[static_cast<std::size_t>(z)];
    for (int z2 = 0; z2 < nz_; ++z2) {
        const double pz = row[static_cast<std::size_t>(z2)];
        if (pz <= 0.0) continue;
        if (e == FT || e == PT) {
            const double l = (e == FT ? layoff_ft_ : layoff_pt_)[static_cast<std::size_t>(t)];
            if (l > 0.0) out.push_back({index(Un, z2, 0), pz * l});
            if (l < 1.0) out.push_back({index(e, z2, 0), pz * (1.0 - l)});
        } else if (e == Un) {
            out.push_back(d + 1 >= nd_ ? Transition{index(Lm, z2, 0), pz} : Transition{index(Un, z2, d + 1), pz});
        } else {
            out.push_back({index(e, z2, 0), pz});
        }
    }
}

double ReducedModel::reward(int t, int s, int a) const {
    std::vector<Transition> dec;
    decision_outcomes(t, s, a, dec);
    const int z = wage_point(s), d = days(s);
    double r = 0.0;
    for (const auto& o : dec) r += o.prob * period_utility(t, o.next, z, o.next == Un ? d : 0);
    return r;
}

void ReducedModel::successors(int t, int s, int a, std::vector<Transition>& out) const {
    std::vector<Transition> dec, ex;
    decision_outcomes(t, s, a, dec);
    const int z = wage_point(s), d = days(s);
    out.clear();
    for (const auto& o : dec) {
        exogenous(t, o.next, z, o.next == Un ? d : 0, ex);
        for (const auto& x : ex) out.push_back({x.next, o.prob * x.prob});
    }
}

void ReducedModel::encode(int t, int s, float* out) const {
    const int e = emp(s);
    for (int k = 0; k < kEmp; ++k) out[k] = k == e ? 1.0f : 0.0f;
    out[kEmp] = static_cast<float>(zgrid_[static_cast<std::size_t>(wage_point(s))] / zgrid_.back());
    out[kEmp + 1] = static_cast<float>(days(s)) / static_cast<float>(nd_);
    out[kEmp + 2] = static_cast<float>(t) / static_cast<float>(T_);
    out[kEmp + 3] = age(t) >= min_ret_ ? 1.0f : 0.0f;
}

ReducedEnv::ReducedEnv(std::shared_ptr<const ReducedModel> model, int slots, std::uint64_t seed)
    : model_(std::move(model)) {
    if (slots < 1) throw ConfigError("ReducedEnv: need at least one slot");
    t_.assign(static_cast<std::size_t>(slots), 0);
    s_.assign(static_cast<std::size_t>(slots), 0);
    for (int i = 0; i < slots; ++i) {
        rng_.emplace_back(derive_seed(seed, 0x726564ULL, static_cast<std::uint64_t>(i)));
        reset(i);
    }
}

int ReducedEnv::draw(const std::vector<Transition>& d, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (const auto& t : d) {
        acc += t.prob;
        if (u < acc) return t.next;
    }
    for (auto it = d.rbegin(); it != d.rend(); ++it) {
        if (it->prob > 0.0) return it->next;
    }
    throw ContractViolation("ReducedEnv: empty distribution");
}

void ReducedEnv::reset(int i) {
    const auto k = static_cast<std::size_t>(i);
    t_[k] = 0;
    const double u = uniform01(rng_[k]);
    const auto& p = model_->start_distribution();
    double acc = 0.0;
    int s = -1;
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] <= 0.0) continue;
        s = static_cast<int>(j);
        acc += p[j];
        if (u < acc) break;
    }
    s_[k] = s;
}

void ReducedEnv::observe(std::span<float> features, std::span<std::uint8_t> mask) const {
    constexpr int F = ReducedModel::kFeatures, A = ReducedModel::kActions;
    for (std::size_t i = 0; i < t_.size(); ++i) {
        model_->encode(t_[i], s_[i], features.data() + i * F);
        for (int a = 0; a < A; ++a) mask[i * A + static_cast<std::size_t>(a)] = model_->legal(t_[i], s_[i], a) ? 1 : 0;
    }
}

void ReducedEnv::step(std::span<const int> actions, std::span<double> rewards, std::span<std::uint8_t> done) {
    std::vector<Transition> ex;
    for (std::size_t i = 0; i < t_.size(); ++i) {
        const int t = t_[i], s = s_[i];
        model_->decision_outcomes(t, s, actions[i], buf_);
        const int e1 = draw(buf_, rng_[i]);
        const int z = model_->wage_point(s);
        const int d = e1 == ReducedModel::Un ? model_->days(s) : 0;
        rewards[i] = model_->period_utility(t, e1, z, d);
        model_->exogenous(t, e1, z, d, ex);
        s_[i] = draw(ex, rng_[i]);
        t_[i] = t + 1;
        done[i] = t_[i] >= model_->horizon() ? 1 : 0;
        if (done[i]) reset(static_cast<int>(i));
    }
}

EnvFactory reduced_factory(std::shared_ptr<const ReducedModel> model) {
    return [model](int slots, std::uint64_t seed) -> std::unique_ptr<VectorEnv> {
        return std::make_unique<ReducedEnv>(model, slots, seed);
    };
}

double dp_start_value(const ReducedModel& m, const DpSolution& sol) {
    double v = 0.0;
    const auto& p = m.start_distribution();
    for (std::size_t s = 0; s < p.size(); ++s) v += p[s] * sol.V(0, static_cast<int>(s));
    return v;
}

double exact_policy_value(const ReducedModel& m, const PolicyNetwork& net, ActMode mode) {
    const int S = m.state_count(), A = m.action_count(), T = m.horizon();
    constexpr int F = ReducedModel::kFeatures;
    std::vector<double> next(static_cast<std::size_t>(S), 0.0), cur(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) next[static_cast<std::size_t>(s)] = m.terminal_value(s);
    Eigen::MatrixXf x(F, S);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(A));
    std::vector<float> p(static_cast<std::size_t>(A));
    std::vector<Transition> buf;
    PolicyNetwork::Cache c;
    for (int t = T - 1; t >= 0; --t) {
        for (int s = 0; s < S; ++s) m.encode(t, s, x.data() + static_cast<std::size_t>(s) * F);
        net.forward(x, c);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) mask[static_cast<std::size_t>(a)] = m.legal(t, s, a) ? 1 : 0;
            masked_softmax(&c.logits(0, s), mask.data(), A, p.data());
            if (mode == ActMode::Greedy) {
                Rng unused(0);
                const int g = select_action(p, ActMode::Greedy, unused);
                std::fill(p.begin(), p.end(), 0.0f);
                p[static_cast<std::size_t>(g)] = 1.0f;
            }
            double v = 0.0;
            for (int a = 0; a < A; ++a) {
                const double pa = p[static_cast<std::size_t>(a)];
                if (pa <= 0.0) continue;
                m.successors(t, s, a, buf);
                double ev = 0.0;
                for (const auto& tr : buf) ev += tr.prob * next[static_cast<std::size_t>(tr.next)];
                v += pa * (m.reward(t, s, a) + m.discount() * ev);
            }
            cur[static_cast<std::size_t>(s)] = v;
        }
        std::swap(cur, next);
    }
    double v = 0.0;
    const auto& st = m.start_distribution();
    for (int s = 0; s < S; ++s) v += st[static_cast<std::size_t>(s)] * next[static_cast<std::size_t>(s)];
    return v;
}

}  // namespace lcm::solver
