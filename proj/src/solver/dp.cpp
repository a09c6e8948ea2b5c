#include "lcm/solver/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lcm/common/errors.hpp"

namespace lcm::solver {

ExplicitMdp::ExplicitMdp(int horizon, int states, int actions, double discount)
    : T_(horizon), S_(states), A_(actions), gamma_(discount) {
    if (horizon < 1 || states < 1 || actions < 1) throw ConfigError("ExplicitMdp: bad dimensions");
    const auto n = static_cast<std::size_t>(states) * static_cast<std::size_t>(actions);
    r_.assign(n, 0.0);
    next_.assign(n, {});
    defined_.assign(n, false);
    terminal_.assign(static_cast<std::size_t>(states), 0.0);
}

void ExplicitMdp::set(int s, int a, double reward, std::vector<Transition> next) {
    double total = 0.0;
    for (const auto& t : next) {
        if (t.next < 0 || t.next >= S_ || t.prob < 0.0) throw ConfigError("ExplicitMdp: bad transition");
        total += t.prob;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("ExplicitMdp: transition probabilities must sum to 1");
    r_[idx(s, a)] = reward;
    next_[idx(s, a)] = std::move(next);
    defined_[idx(s, a)] = true;
}

namespace {

constexpr double kIllegal = -std::numeric_limits<double>::infinity();

DpSolution prepare(const FiniteMdp& mdp, std::int64_t max_states) {
    const std::int64_t total = static_cast<std::int64_t>(mdp.horizon()) * mdp.state_count();
    if (total > max_states) {
        throw ConfigError("dp_solve: " + std::to_string(total) + " states (" + std::to_string(mdp.horizon()) +
                          " steps x " + std::to_string(mdp.state_count()) + ") exceeds the limit of " +
                          std::to_string(max_states));
    }
    DpSolution sol;
    sol.horizon = mdp.horizon();
    sol.states = mdp.state_count();
    sol.actions = mdp.action_count();
    sol.value.assign(static_cast<std::size_t>(sol.horizon + 1) * sol.states, 0.0);
    sol.policy.assign(static_cast<std::size_t>(sol.horizon) * sol.states, -1);
    sol.q.assign(static_cast<std::size_t>(sol.horizon) * sol.states * sol.actions, kIllegal);
    for (int s = 0; s < sol.states; ++s) {
        sol.value[static_cast<std::size_t>(sol.horizon) * sol.states + static_cast<std::size_t>(s)] = mdp.terminal_value(s);
    }
    return sol;
}

void backup(const FiniteMdp& mdp, DpSolution& sol, int t, int s, std::vector<Transition>& buf) {
    const double g = mdp.discount();
    const double* next = &sol.value[static_cast<std::size_t>(t + 1) * sol.states];
    double best = kIllegal;
    int arg = -1;
    for (int a = 0; a < sol.actions; ++a) {
        if (!mdp.legal(t, s, a)) continue;
        mdp.successors(t, s, a, buf);
        double ev = 0.0;
        for (const auto& tr : buf) ev += tr.prob * next[tr.next];
        const double q = mdp.reward(t, s, a) + g * ev;
        sol.q[(static_cast<std::size_t>(t) * sol.states + static_cast<std::size_t>(s)) * sol.actions +
              static_cast<std::size_t>(a)] = q;
        if (arg < 0 || q > best) {
            best = q;
            arg = a;
        }
    }
    if (arg < 0) throw ConfigError("dp_solve: no legal action at t=" + std::to_string(t) + " s=" + std::to_string(s));
    sol.value[static_cast<std::size_t>(t) * sol.states + static_cast<std::size_t>(s)] = best;
    sol.policy[static_cast<std::size_t>(t) * sol.states + static_cast<std::size_t>(s)] = arg;
}

}  // namespace

DpSolution dp_solve(const FiniteMdp& mdp, std::int64_t max_states) {
    auto sol = prepare(mdp, max_states);
    const int S = sol.states;
    for (int t = sol.horizon - 1; t >= 0; --t) {
        bool failed = false;
        std::string what;
#pragma omp parallel
        {
            std::vector<Transition> buf;
#pragma omp for schedule(static)
            for (int s = 0; s < S; ++s) {
                try {
                    backup(mdp, sol, t, s, buf);
                } catch (const std::exception& e) {
#pragma omp critical
                    {
                        failed = true;
                        what = e.what();
                    }
                }
            }
        }
        if (failed) throw ConfigError(what);
    }
    return sol;
}

DpSolution dp_solve_serial(const FiniteMdp& mdp, std::int64_t max_states) {
    auto sol = prepare(mdp, max_states);
    std::vector<Transition> buf;
    for (int t = sol.horizon - 1; t >= 0; --t) {
        for (int s = 0; s < sol.states; ++s) backup(mdp, sol, t, s, buf);
    }
    return sol;
}

double bellman_residual(const FiniteMdp& mdp, const DpSolution& sol) {
    double worst = 0.0;
    std::vector<Transition> buf;
    for (int s = 0; s < sol.states; ++s) {
        worst = std::max(worst, std::abs(sol.V(sol.horizon, s) - mdp.terminal_value(s)));
    }
    for (int t = 0; t < sol.horizon; ++t) {
        for (int s = 0; s < sol.states; ++s) {
            double best = kIllegal;
            for (int a = 0; a < mdp.action_count(); ++a) {
                if (!mdp.legal(t, s, a)) continue;
                mdp.successors(t, s, a, buf);
                // Successor-major accumulation with a compensated sum, independent of the solver's loop.
                double sum = 0.0, comp = 0.0;
                for (const auto& tr : buf) {
                    const double y = tr.prob * sol.V(t + 1, tr.next) - comp;
                    const double z = sum + y;
                    comp = (z - sum) - y;
                    sum = z;
                }
                best = std::max(best, mdp.reward(t, s, a) + mdp.discount() * sum);
            }
            worst = std::max(worst, std::abs(sol.V(t, s) - best));
        }
    }
    return worst;
}

}  // namespace lcm::solver
