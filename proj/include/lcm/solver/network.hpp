#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "lcm/common/rng.hpp"

namespace lcm::solver {

// Shared trunk of leaky-ReLU layers feeding a policy head (logits) and a value head.
// All parameters live in one flat buffer; layer matrices are column-major views into it.
template <typename T>
class BasicPolicyNetwork {
public:
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    using MatrixMap = Eigen::Map<Matrix>;
    using ConstMatrixMap = Eigen::Map<const Matrix>;
    using VectorMap = Eigen::Map<Vector>;
    using ConstVectorMap = Eigen::Map<const Vector>;

    static constexpr T kLeak = T(0.01);

    struct Layer {
        int in = 0, out = 0;
        std::size_t w = 0, b = 0;  // offsets into the parameter buffer
    };

    // Per-batch activations kept for the backward pass.
    struct Cache {
        std::vector<Matrix> inputs;  // input to each dense layer (trunk layers, then the shared head input)
        std::vector<Matrix> pre;     // pre-activations of trunk layers
        Matrix logits;               // actions x batch
        Matrix values;               // 1 x batch
    };

    // Gradients w.r.t. the head outputs and pre-activations, per layer, for curvature estimates.
    struct LayerSignals {
        std::vector<Matrix> dpre;  // trunk layers, then policy head, then value head
    };

    BasicPolicyNetwork() = default;
    BasicPolicyNetwork(int input_dim, std::vector<int> hidden, int actions, std::uint64_t seed);

    int input_dim() const { return input_dim_; }
    int action_count() const { return actions_; }
    const std::vector<int>& hidden() const { return hidden_; }
    std::size_t parameter_count() const { return params_.size(); }
    std::span<T> parameters() { return params_; }
    std::span<const T> parameters() const { return params_; }
    const std::vector<Layer>& layers() const { return layers_; }  // trunk..., policy head, value head

    MatrixMap weight(int layer);
    ConstMatrixMap weight(int layer) const;
    VectorMap bias(int layer);
    ConstVectorMap bias(int layer) const;

    void forward(const Eigen::Ref<const Matrix>& x, Cache& cache) const;
    // Accumulates parameter gradients into `grad` (same layout as parameters()).
    void backward(const Cache& cache, const Eigen::Ref<const Matrix>& dlogits, const Eigen::Ref<const Matrix>& dvalues,
                  std::span<T> grad, LayerSignals* signals = nullptr) const;

    template <typename U>
    BasicPolicyNetwork<U> cast() const;

    bool operator==(const BasicPolicyNetwork& o) const;

private:
    template <typename U>
    friend class BasicPolicyNetwork;

    void build_layout();

    int input_dim_ = 0;
    int actions_ = 0;
    std::vector<int> hidden_;
    std::vector<Layer> layers_;
    std::vector<T> params_;
};

using PolicyNetwork = BasicPolicyNetwork<float>;

// Probabilities over actions; illegal entries are exactly 0. Throws ContractViolation on an empty mask.
template <typename T>
void masked_softmax(const T* logits, const std::uint8_t* mask, int n, T* probs);

enum class ActMode { Sample, Greedy };

// Greedy ties go to the lowest index.
int policy_act(const PolicyNetwork& net, std::span<const float> features, std::span<const std::uint8_t> mask,
               ActMode mode, Rng& rng);
int select_action(std::span<const float> probs, ActMode mode, Rng& rng);

float value_estimate(const PolicyNetwork& net, std::span<const float> features);
// Column-wise batch version.
Eigen::VectorXf value_estimate(const PolicyNetwork& net, const Eigen::Ref<const Eigen::MatrixXf>& features);

}  // namespace lcm::solver
