#include "lcm/solver/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lcm/common/errors.hpp"

namespace lcm::solver {

template <typename T>
BasicPolicyNetwork<T>::BasicPolicyNetwork(int input_dim, std::vector<int> hidden, int actions, std::uint64_t seed)
    : input_dim_(input_dim), actions_(actions), hidden_(std::move(hidden)) {
    if (input_dim_ < 1 || actions_ < 1 || hidden_.empty()) throw ConfigError("network: bad shape");
    for (int h : hidden_) {
        if (h < 1) throw ConfigError("network: hidden sizes must be positive");
    }
    build_layout();
    Rng rng(derive_seed(seed, 0x6e6574ULL));
    const int heads = static_cast<int>(layers_.size()) - 2;
    for (int l = 0; l < static_cast<int>(layers_.size()); ++l) {
        const auto& L = layers_[static_cast<std::size_t>(l)];
        double scale = std::sqrt(2.0 / L.in);
        if (l == heads) scale = 0.01;            // policy head: near-uniform start
        if (l == heads + 1) scale = 1.0 / std::sqrt(L.in);
        for (int i = 0; i < L.in * L.out; ++i) params_[L.w + static_cast<std::size_t>(i)] = static_cast<T>(scale * standard_normal(rng));
    }
}

template <typename T>
void BasicPolicyNetwork<T>::build_layout() {
    layers_.clear();
    std::size_t off = 0;
    int in = input_dim_;
    auto add = [&](int i, int o) {
        Layer L{i, o, off, off + static_cast<std::size_t>(i) * static_cast<std::size_t>(o)};
        off = L.b + static_cast<std::size_t>(o);
        layers_.push_back(L);
    };
    for (int h : hidden_) {
        add(in, h);
        in = h;
    }
    add(in, actions_);
    add(in, 1);
    params_.assign(off, T(0));
}

template <typename T>
typename BasicPolicyNetwork<T>::MatrixMap BasicPolicyNetwork<T>::weight(int l) {
    const auto& L = layers_[static_cast<std::size_t>(l)];
    return MatrixMap(params_.data() + L.w, L.out, L.in);
}
template <typename T>
typename BasicPolicyNetwork<T>::ConstMatrixMap BasicPolicyNetwork<T>::weight(int l) const {
    const auto& L = layers_[static_cast<std::size_t>(l)];
    return ConstMatrixMap(params_.data() + L.w, L.out, L.in);
}
template <typename T>
typename BasicPolicyNetwork<T>::VectorMap BasicPolicyNetwork<T>::bias(int l) {
    const auto& L = layers_[static_cast<std::size_t>(l)];
    return VectorMap(params_.data() + L.b, L.out);
}
template <typename T>
typename BasicPolicyNetwork<T>::ConstVectorMap BasicPolicyNetwork<T>::bias(int l) const {
    const auto& L = layers_[static_cast<std::size_t>(l)];
    return ConstVectorMap(params_.data() + L.b, L.out);
}

template <typename T>
void BasicPolicyNetwork<T>::forward(const Eigen::Ref<const Matrix>& x, Cache& c) const {
    if (x.rows() != input_dim_) throw ContractViolation("network: input dimension mismatch");
    const int trunk = static_cast<int>(hidden_.size());
    c.inputs.resize(static_cast<std::size_t>(trunk + 1));
    c.pre.resize(static_cast<std::size_t>(trunk));
    c.inputs[0] = x;
    for (int l = 0; l < trunk; ++l) {
        auto& z = c.pre[static_cast<std::size_t>(l)];
        z.noalias() = weight(l) * c.inputs[static_cast<std::size_t>(l)];
        z.colwise() += bias(l);
        c.inputs[static_cast<std::size_t>(l + 1)] = z.unaryExpr([](T v) { return v > T(0) ? v : kLeak * v; });
    }
    const auto& h = c.inputs[static_cast<std::size_t>(trunk)];
    c.logits.noalias() = weight(trunk) * h;
    c.logits.colwise() += bias(trunk);
    c.values.noalias() = weight(trunk + 1) * h;
    c.values.colwise() += bias(trunk + 1);
}

template <typename T>
void BasicPolicyNetwork<T>::backward(const Cache& c, const Eigen::Ref<const Matrix>& dlogits,
                                     const Eigen::Ref<const Matrix>& dvalues, std::span<T> grad,
                                     LayerSignals* signals) const {
    if (grad.size() != params_.size()) throw ContractViolation("network: gradient buffer size mismatch");
    const int trunk = static_cast<int>(hidden_.size());
    const auto& h = c.inputs[static_cast<std::size_t>(trunk)];
    auto gW = [&](int l) {
        const auto& L = layers_[static_cast<std::size_t>(l)];
        return MatrixMap(grad.data() + L.w, L.out, L.in);
    };
    auto gb = [&](int l) {
        const auto& L = layers_[static_cast<std::size_t>(l)];
        return VectorMap(grad.data() + L.b, L.out);
    };
    gW(trunk).noalias() += dlogits * h.transpose();
    gb(trunk) += dlogits.rowwise().sum();
    gW(trunk + 1).noalias() += dvalues * h.transpose();
    gb(trunk + 1) += dvalues.rowwise().sum();

    Matrix da = weight(trunk).transpose() * dlogits;
    da.noalias() += weight(trunk + 1).transpose() * dvalues;
    if (signals) signals->dpre.assign(static_cast<std::size_t>(trunk + 2), Matrix());
    for (int l = trunk - 1; l >= 0; --l) {
        const auto& z = c.pre[static_cast<std::size_t>(l)];
        Matrix dz = da.binaryExpr(z, [](T g, T v) { return v > T(0) ? g : kLeak * g; });
        gW(l).noalias() += dz * c.inputs[static_cast<std::size_t>(l)].transpose();
        gb(l) += dz.rowwise().sum();
        if (l > 0) da.noalias() = weight(l).transpose() * dz;
        if (signals) signals->dpre[static_cast<std::size_t>(l)] = std::move(dz);
    }
    if (signals) {
        signals->dpre[static_cast<std::size_t>(trunk)] = dlogits;
        signals->dpre[static_cast<std::size_t>(trunk + 1)] = dvalues;
    }
}

template <typename T>
template <typename U>
BasicPolicyNetwork<U> BasicPolicyNetwork<T>::cast() const {
    BasicPolicyNetwork<U> out;
    out.input_dim_ = input_dim_;
    out.actions_ = actions_;
    out.hidden_ = hidden_;
    out.build_layout();
    for (std::size_t i = 0; i < params_.size(); ++i) out.params_[i] = static_cast<U>(params_[i]);
    return out;
}

template <typename T>
bool BasicPolicyNetwork<T>::operator==(const BasicPolicyNetwork& o) const {
    return input_dim_ == o.input_dim_ && actions_ == o.actions_ && hidden_ == o.hidden_ && params_ == o.params_;
}

template class BasicPolicyNetwork<float>;
template class BasicPolicyNetwork<double>;
template BasicPolicyNetwork<double> BasicPolicyNetwork<float>::cast<double>() const;
template BasicPolicyNetwork<float> BasicPolicyNetwork<double>::cast<float>() const;

template <typename T>
void masked_softmax(const T* logits, const std::uint8_t* mask, int n, T* probs) {
    T mx = -std::numeric_limits<T>::infinity();
    for (int i = 0; i < n; ++i) {
        if (mask[i]) mx = std::max(mx, logits[i]);
    }
    if (mx == -std::numeric_limits<T>::infinity()) throw ContractViolation("masked_softmax: empty action mask");
    T sum = 0;
    for (int i = 0; i < n; ++i) {
        probs[i] = mask[i] ? std::exp(logits[i] - mx) : T(0);
        sum += probs[i];
    }
    for (int i = 0; i < n; ++i) probs[i] /= sum;
}

template void masked_softmax<float>(const float*, const std::uint8_t*, int, float*);
template void masked_softmax<double>(const double*, const std::uint8_t*, int, double*);

int select_action(std::span<const float> probs, ActMode mode, Rng& rng) {
    const int n = static_cast<int>(probs.size());
    if (mode == ActMode::Greedy) {
        int best = -1;
        for (int i = 0; i < n; ++i) {
            if (probs[static_cast<std::size_t>(i)] > 0.0f && (best < 0 || probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(best)])) best = i;
        }
        if (best < 0) throw ContractViolation("select_action: no legal action");
        return best;
    }
    const double u = uniform01(rng);
    double acc = 0.0;
    int last = -1;
    for (int i = 0; i < n; ++i) {
        if (probs[static_cast<std::size_t>(i)] <= 0.0f) continue;
        last = i;
        acc += probs[static_cast<std::size_t>(i)];
        if (u < acc) return i;
    }
    if (last < 0) throw ContractViolation("select_action: no legal action");
    return last;
}

int policy_act(const PolicyNetwork& net, std::span<const float> features, std::span<const std::uint8_t> mask,
               ActMode mode, Rng& rng) {
    if (static_cast<int>(mask.size()) != net.action_count()) throw ContractViolation("policy_act: mask size mismatch");
    if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
        throw ContractViolation("policy_act: empty action mask");
    }
    PolicyNetwork::Cache c;
    net.forward(Eigen::Map<const Eigen::MatrixXf>(features.data(), static_cast<Eigen::Index>(features.size()), 1), c);
    std::vector<float> p(mask.size());
    masked_softmax(c.logits.data(), mask.data(), net.action_count(), p.data());
    return select_action(p, mode, rng);
}

float value_estimate(const PolicyNetwork& net, std::span<const float> features) {
    PolicyNetwork::Cache c;
    net.forward(Eigen::Map<const Eigen::MatrixXf>(features.data(), static_cast<Eigen::Index>(features.size()), 1), c);
    return c.values(0, 0);
}

Eigen::VectorXf value_estimate(const PolicyNetwork& net, const Eigen::Ref<const Eigen::MatrixXf>& features) {
    PolicyNetwork::Cache c;
    net.forward(features, c);
    return c.values.row(0).transpose();
}

}  // namespace lcm::solver
