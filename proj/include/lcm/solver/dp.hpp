#pragma once

#include <cstdint>
#include <vector>

namespace lcm::solver {

struct Transition {
    int next = 0;
    double prob = 0.0;
};

// Finite-horizon MDP with decision steps t = 0..horizon-1 and the same state
// index space at every step. Rewards are expected immediate rewards.
class FiniteMdp {
public:
    virtual ~FiniteMdp() = default;
    virtual int horizon() const = 0;
    virtual int state_count() const = 0;
    virtual int action_count() const = 0;
    virtual double discount() const = 0;
    virtual bool legal(int t, int s, int a) const = 0;
    virtual double reward(int t, int s, int a) const = 0;
    virtual void successors(int t, int s, int a, std::vector<Transition>& out) const = 0;
    virtual double terminal_value(int /*s*/) const { return 0.0; }
};

// Stationary tables; used for hand-solvable toys.
class ExplicitMdp final : public FiniteMdp {
public:
    ExplicitMdp(int horizon, int states, int actions, double discount);

    void set(int s, int a, double reward, std::vector<Transition> next);
    void set_terminal(int s, double v) { terminal_[static_cast<std::size_t>(s)] = v; }

    int horizon() const override { return T_; }
    int state_count() const override { return S_; }
    int action_count() const override { return A_; }
    double discount() const override { return gamma_; }
    bool legal(int, int s, int a) const override { return defined_[idx(s, a)]; }
    double reward(int, int s, int a) const override { return r_[idx(s, a)]; }
    void successors(int, int s, int a, std::vector<Transition>& out) const override { out = next_[idx(s, a)]; }
    double terminal_value(int s) const override { return terminal_[static_cast<std::size_t>(s)]; }

private:
    std::size_t idx(int s, int a) const { return static_cast<std::size_t>(s) * A_ + static_cast<std::size_t>(a); }
    int T_, S_, A_;
    double gamma_;
    std::vector<double> r_;
    std::vector<std::vector<Transition>> next_;
    std::vector<bool> defined_;
    std::vector<double> terminal_;
};

struct DpSolution {
    int horizon = 0, states = 0, actions = 0;
    std::vector<double> value;  // (horizon+1) x states; the last row is the terminal value
    std::vector<int> policy;    // horizon x states, greedy, lowest index on ties
    std::vector<double> q;      // horizon x states x actions; -inf where illegal

    double V(int t, int s) const { return value[static_cast<std::size_t>(t) * states + static_cast<std::size_t>(s)]; }
    int pi(int t, int s) const { return policy[static_cast<std::size_t>(t) * states + static_cast<std::size_t>(s)]; }
    double Q(int t, int s, int a) const {
        return q[(static_cast<std::size_t>(t) * states + static_cast<std::size_t>(s)) * actions + static_cast<std::size_t>(a)];
    }
};

inline constexpr std::int64_t kMaxDpStates = 1'000'000;

// Backward induction. Throws ConfigError with the size when horizon x states exceeds the limit,
// or when a state has no legal action. The parallel and serial versions give identical tables.
DpSolution dp_solve(const FiniteMdp& mdp, std::int64_t max_states = kMaxDpStates);
DpSolution dp_solve_serial(const FiniteMdp& mdp, std::int64_t max_states = kMaxDpStates);

// max over (t, s) of |V_t(s) - max_a [r + gamma E V_{t+1}]|, recomputed from the model.
double bellman_residual(const FiniteMdp& mdp, const DpSolution& sol);

}  // namespace lcm::solver
