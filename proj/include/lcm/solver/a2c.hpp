#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcm/common/io.hpp"
#include "lcm/solver/network.hpp"
#include "lcm/solver/vec_env.hpp"

namespace lcm::solver {

struct TrainConfig {
    std::int64_t total_steps = 5'000'000;  // slot-steps (one agent-quarter each)
    int envs = 64;                          // parallel slots
    int n_steps = 16;                       // rollout length / n-step return horizon
    double lr = 7e-4;
    double lr_final = 7e-5;                 // linear decay from lr to lr_final over training
    bool natural_gradient = false;          // K-FAC preconditioning with a KL trust region
    double kfac_max_kl = 1e-3;
    double kfac_damping = 1e-2;
    double kfac_stat_decay = 0.95;
    int kfac_inverse_every = 10;
    double momentum = 0.9;                  // used with natural_gradient
    double reward_scale = 0.1;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double max_grad_norm = 0.5;
    std::vector<int> hidden{256, 256, 128};
    std::uint64_t seed = 1;
    int checkpoints = 10;                   // evaluation / divergence checks over the run
    int eval_episodes = 1000;               // 0 disables evaluation
    double divergence_factor = 10.0;
    int divergence_patience = 3;

    void validate() const;
};

TrainConfig train_config_from_json(const Json& j);  // missing keys keep defaults
Json to_json(const TrainConfig& c);
std::uint64_t config_hash(const TrainConfig& c);

// One rollout batch in the loss's own terms. Advantages and returns are constants.
template <typename T>
struct LossBatch {
    typename BasicPolicyNetwork<T>::Matrix features;  // feature_dim x B
    std::vector<std::uint8_t> mask;                  // action_count x B
    std::vector<int> actions;
    std::vector<T> advantages;
    std::vector<T> returns;
};

struct LossTerms {
    double total = 0.0;
    double policy = 0.0;
    double value = 0.0;    // mean 0.5 (V - R)^2
    double entropy = 0.0;  // mean
};

// loss = mean[-A log pi(a) + c_v 0.5 (V-R)^2] - c_e mean[H]; gradient accumulated into `grad` when non-empty.
template <typename T>
LossTerms a2c_loss(const BasicPolicyNetwork<T>& net, const LossBatch<T>& batch, double value_coef,
                   double entropy_coef, std::span<T> grad);

struct CheckpointMetrics {
    std::int64_t steps = 0;
    std::int64_t updates = 0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double mean_reward = 0.0;  // unscaled, per slot-step
    double eval_return = 0.0;  // NaN when evaluation is off
    double eval_sd = 0.0;
    double lr = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    PolicyNetwork net;
    std::vector<CheckpointMetrics> curve;
    std::uint64_t actions_executed = 0;
    std::uint64_t illegal_actions = 0;  // actions outside the legal mask; must stay 0
};

using CheckpointCallback = std::function<void(const PolicyNetwork&, const CheckpointMetrics&)>;

// Throws TrainingDiverged when the value loss stays above divergence_factor x its
// first checkpoint value for divergence_patience consecutive checkpoints.
TrainResult train_actor_critic(const EnvFactory& factory, const TrainConfig& cfg,
                               const PolicyNetwork* init = nullptr, const CheckpointCallback& on_checkpoint = {});

struct EvalResult {
    double mean = 0.0;
    double sd = 0.0;
    int episodes = 0;
};

// Mean discounted episode return from `episodes` seeded episodes.
EvalResult evaluate_policy(const PolicyNetwork& net, const EnvFactory& factory, int episodes, std::uint64_t seed,
                           ActMode mode, int slots = 0);

// Wall-clock time is left out so identical runs give identical files.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<CheckpointMetrics>& curve);

// Binary checkpoint: magic, format version, config hash, shape, float parameters.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const std::filesystem::path& path, const PolicyNetwork& net, std::uint64_t config_hash);
struct LoadedCheckpoint {
    PolicyNetwork net;
    std::uint64_t config_hash = 0;
};
// Throws ConfigError on a bad magic, version or truncated file.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lcm::solver
