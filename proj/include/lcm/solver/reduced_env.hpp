#pragma once

#include <array>
#include <memory>
#include <vector>

#include "lcm/env/env.hpp"
#include "lcm/solver/dp.hpp"
#include "lcm/solver/network.hpp"
#include "lcm/solver/vec_env.hpp"

namespace lcm::solver {

// Single agent, five employment states, a Tauchen wage grid and ER benefit days
// counted in quarters. Built from the same rules engine, wage profile, friction
// table, layoff hazard and utility as the full model.
struct ReducedSpec {
    Gender gender = Gender::Male;
    int group = 1;
    int wage_points = 7;
    double wage_span = 2.5;  // grid half-width in stationary standard deviations
    int pt_hours = 16;
    std::array<double, 5> start_share{0.3, 0.2, 0.0, 0.5, 0.0};  // FT PT Un Lm Re at 18
};

class ReducedModel final : public FiniteMdp {
public:
    enum Emp : int { FT = 0, PT, Un, Lm, Re };
    static constexpr int kEmp = 5;
    enum Act : int { Stay = 0, SeekFullTime, SeekPartTime, Quit, Retire };
    static constexpr int kActions = 5;

    ReducedModel(const env::Model& m, ReducedSpec spec = {});

    int horizon() const override { return T_; }
    int state_count() const override { return kEmp * nz_ * nd_; }
    int action_count() const override { return kActions; }
    double discount() const override { return gamma_; }
    bool legal(int t, int s, int a) const override;
    double reward(int t, int s, int a) const override;
    void successors(int t, int s, int a, std::vector<Transition>& out) const override;

    int index(int e, int z, int d) const { return (e * nz_ + z) * nd_ + d; }
    int emp(int s) const { return s / (nz_ * nd_); }
    int wage_point(int s) const { return (s / nd_) % nz_; }
    int days(int s) const { return s % nd_; }
    int wage_points() const { return nz_; }
    int day_bins() const { return nd_; }
    double age(int t) const { return 18.0 + 0.25 * t; }

    // Stage 1: employment right after the decision, with job-search friction.
    void decision_outcomes(int t, int s, int a, std::vector<Transition>& out) const;  // next = employment index
    // Period utility once the decision has been realized.
    double period_utility(int t, int e, int z, int d) const;
    // Stage 2: wage shock, ER day count, layoff. Returns (state, prob) pairs.
    void exogenous(int t, int e, int z, int d, std::vector<Transition>& out) const;

    // Start-of-life distribution over states at t = 0.
    const std::vector<double>& start_distribution() const { return start_; }
    static constexpr int kFeatures = kEmp + 4;
    void encode(int t, int s, float* out) const;

private:
    const ReducedSpec spec_;
    int T_ = 0, nz_ = 0, nd_ = 0;
    double gamma_ = 1.0;
    double min_ret_ = 64.0;
    std::vector<double> zgrid_;
    std::vector<std::vector<double>> ztrans_;  // [z][z']
    std::vector<double> u_;                    // [t][e][z][d]
    std::vector<double> layoff_ft_, layoff_pt_, find_ft_, find_pt_;
    double pt_fallback_ = 0.0;
    std::vector<double> start_;
};

// Vector environment over ReducedModel; each slot is an independent life from age 18.
class ReducedEnv final : public VectorEnv {
public:
    ReducedEnv(std::shared_ptr<const ReducedModel> model, int slots, std::uint64_t seed);

    int slots() const override { return static_cast<int>(t_.size()); }
    int feature_dim() const override { return ReducedModel::kFeatures; }
    int action_count() const override { return ReducedModel::kActions; }
    double discount() const override { return model_->discount(); }
    void observe(std::span<float> features, std::span<std::uint8_t> mask) const override;
    void step(std::span<const int> actions, std::span<double> rewards, std::span<std::uint8_t> done) override;

    int time(int slot) const { return t_[static_cast<std::size_t>(slot)]; }
    int state(int slot) const { return s_[static_cast<std::size_t>(slot)]; }

private:
    void reset(int i);
    static int draw(const std::vector<Transition>& d, Rng& rng);

    std::shared_ptr<const ReducedModel> model_;
    std::vector<int> t_, s_;
    std::vector<Rng> rng_;
    std::vector<Transition> buf_;
};

EnvFactory reduced_factory(std::shared_ptr<const ReducedModel> model);

// Exact expected discounted return of the start distribution under the DP policy.
double dp_start_value(const ReducedModel& m, const DpSolution& sol);

// Exact expected return of a network policy on the reduced model by policy evaluation
// over every (t, s), using the sampled-action probabilities or the greedy choice.
double exact_policy_value(const ReducedModel& m, const PolicyNetwork& net, ActMode mode);

}  // namespace lcm::solver
