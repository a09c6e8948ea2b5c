#include "lcm/solver/vec_env.hpp"

#include <omp.h>

#include "lcm/common/errors.hpp"

namespace lcm::solver {

LifeCycleEnv::LifeCycleEnv(std::shared_ptr<const env::Model> model, int households, std::uint64_t seed)
    : model_(std::move(model)), seed_(seed) {
    if (households < 1) throw ConfigError("LifeCycleEnv: need at least one household");
    households_.resize(static_cast<std::size_t>(households));
    episode_.assign(static_cast<std::size_t>(households), 0);
    for (int i = 0; i < households; ++i) reset(i);
}

void LifeCycleEnv::reset(int i) {
    auto& e = episode_[static_cast<std::size_t>(i)];
    const auto s = derive_seed(seed_, static_cast<std::uint64_t>(i), e++);
    auto pop = population::init_population(1, model_->demo, s);
    auto& hh = households_[static_cast<std::size_t>(i)];
    hh = pop.households.front();
    hh.id = static_cast<std::uint64_t>(i);
    env::prepare_household(hh, *model_);
}

void LifeCycleEnv::observe(std::span<float> features, std::span<std::uint8_t> mask) const {
    const int n = static_cast<int>(households_.size());
    constexpr int F = env::kFeatureCount;
    constexpr int A = env::kActionCount;
    if (features.size() != static_cast<std::size_t>(F * 2 * n) || mask.size() != static_cast<std::size_t>(A * 2 * n)) {
        throw ContractViolation("LifeCycleEnv::observe: buffer size mismatch");
    }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto& hh = households_[static_cast<std::size_t>(i)];
        const auto ctx = model_->context(hh);
        for (int who = 0; who < 2; ++who) {
            const std::size_t slot = static_cast<std::size_t>(2 * i + who);
            env::encode_features(hh, who, *model_, features.subspan(slot * F, F));
            const auto m = env::legal_mask(hh.agents[static_cast<std::size_t>(who)], ctx);
            for (int a = 0; a < A; ++a) mask[slot * A + static_cast<std::size_t>(a)] = m[static_cast<std::size_t>(a)];
        }
    }
}

void LifeCycleEnv::step(std::span<const int> actions, std::span<double> rewards, std::span<std::uint8_t> done) {
    const int n = static_cast<int>(households_.size());
    std::vector<env::TransitionAudit> audits(static_cast<std::size_t>(omp_get_max_threads()));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        auto& hh = households_[static_cast<std::size_t>(i)];
        const std::array<env::Action, 2> act{static_cast<env::Action>(actions[static_cast<std::size_t>(2 * i)]),
                                             static_cast<env::Action>(actions[static_cast<std::size_t>(2 * i + 1)])};
        const auto r = env::step(hh, act, *model_, &audits[static_cast<std::size_t>(omp_get_thread_num())]);
        for (int who = 0; who < 2; ++who) {
            rewards[static_cast<std::size_t>(2 * i + who)] = r.reward[static_cast<std::size_t>(who)];
            done[static_cast<std::size_t>(2 * i + who)] = r.done ? 1 : 0;
        }
        if (r.done) reset(i);
    }
    for (const auto& a : audits) audit_ += a;
}

EnvFactory lifecycle_factory(std::shared_ptr<const env::Model> model) {
    return [model](int slots, std::uint64_t seed) -> std::unique_ptr<VectorEnv> {
        if (slots < 2 || slots % 2 != 0) throw ConfigError("LifeCycleEnv: slot count must be even");
        return std::make_unique<LifeCycleEnv>(model, slots / 2, seed);
    };
}

}  // namespace lcm::solver
