#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "lcm/env/env.hpp"
#include "lcm/env/features.hpp"

namespace lcm::solver {

// A batch of independent episodes seen by the trainer. Each slot is one agent
// perspective; a slot whose episode ends is reset in place on the same step.
class VectorEnv {
public:
    virtual ~VectorEnv() = default;
    virtual int slots() const = 0;
    virtual int feature_dim() const = 0;
    virtual int action_count() const = 0;
    virtual double discount() const = 0;  // per step

    // Column-major: features is feature_dim x slots, mask is action_count x slots.
    virtual void observe(std::span<float> features, std::span<std::uint8_t> mask) const = 0;
    virtual void step(std::span<const int> actions, std::span<double> rewards, std::span<std::uint8_t> done) = 0;
};

// slots, seed -> fresh environment. The same arguments must give the same episodes.
using EnvFactory = std::function<std::unique_ptr<VectorEnv>(int slots, std::uint64_t seed)>;

// Full household model: two slots per household (man, woman), one shared policy.
class LifeCycleEnv final : public VectorEnv {
public:
    LifeCycleEnv(std::shared_ptr<const env::Model> model, int households, std::uint64_t seed);

    int slots() const override { return 2 * static_cast<int>(households_.size()); }
    int feature_dim() const override { return env::kFeatureCount; }
    int action_count() const override { return env::kActionCount; }
    double discount() const override { return model_->utility.step_discount(); }
    void observe(std::span<float> features, std::span<std::uint8_t> mask) const override;
    void step(std::span<const int> actions, std::span<double> rewards, std::span<std::uint8_t> done) override;

    const env::TransitionAudit& audit() const { return audit_; }
    const env::HouseholdState& household(int i) const { return households_[static_cast<std::size_t>(i)]; }

private:
    void reset(int i);

    std::shared_ptr<const env::Model> model_;
    std::uint64_t seed_;
    std::vector<env::HouseholdState> households_;
    std::vector<std::uint64_t> episode_;
    env::TransitionAudit audit_;
};

EnvFactory lifecycle_factory(std::shared_ptr<const env::Model> model);

}  // namespace lcm::solver
