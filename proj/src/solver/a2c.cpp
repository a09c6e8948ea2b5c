#include "lcm/solver/a2c.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "lcm/common/errors.hpp"

namespace lcm::solver {

void TrainConfig::validate() const {
    if (total_steps <= 0) throw ConfigError("train: total_steps must be > 0");
    if (reward_scale <= 0.0) throw ConfigError("train: reward_scale must be > 0");
    if (envs < 1 || n_steps < 1) throw ConfigError("train: envs and n_steps must be >= 1");
    if (!(lr > 0.0) || lr_final < 0.0) throw ConfigError("train: bad learning rate schedule");
    if (checkpoints < 1) throw ConfigError("train: checkpoints must be >= 1");
    if (eval_episodes < 0) throw ConfigError("train: eval_episodes must be >= 0");
    if (hidden.empty()) throw ConfigError("train: hidden layer list is empty");
    if (natural_gradient && (kfac_max_kl <= 0.0 || kfac_damping <= 0.0 || kfac_inverse_every < 1)) {
        throw ConfigError("train: bad K-FAC settings");
    }
}

TrainConfig train_config_from_json(const Json& j) {
    TrainConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("total_steps", c.total_steps);
    get("envs", c.envs);
    get("n_steps", c.n_steps);
    get("lr", c.lr);
    get("lr_final", c.lr_final);
    get("natural_gradient", c.natural_gradient);
    get("kfac_max_kl", c.kfac_max_kl);
    get("kfac_damping", c.kfac_damping);
    get("kfac_stat_decay", c.kfac_stat_decay);
    get("kfac_inverse_every", c.kfac_inverse_every);
    get("momentum", c.momentum);
    get("reward_scale", c.reward_scale);
    get("entropy_coef", c.entropy_coef);
    get("value_coef", c.value_coef);
    get("max_grad_norm", c.max_grad_norm);
    get("hidden", c.hidden);
    get("seed", c.seed);
    get("checkpoints", c.checkpoints);
    get("eval_episodes", c.eval_episodes);
    get("divergence_factor", c.divergence_factor);
    get("divergence_patience", c.divergence_patience);
    c.validate();
    return c;
}

Json to_json(const TrainConfig& c) {
    return Json{{"total_steps", c.total_steps},
                {"envs", c.envs},
                {"n_steps", c.n_steps},
                {"lr", c.lr},
                {"lr_final", c.lr_final},
                {"natural_gradient", c.natural_gradient},
                {"kfac_max_kl", c.kfac_max_kl},
                {"kfac_damping", c.kfac_damping},
                {"kfac_stat_decay", c.kfac_stat_decay},
                {"kfac_inverse_every", c.kfac_inverse_every},
                {"momentum", c.momentum},
                {"reward_scale", c.reward_scale},
                {"entropy_coef", c.entropy_coef},
                {"value_coef", c.value_coef},
                {"max_grad_norm", c.max_grad_norm},
                {"hidden", c.hidden},
                {"seed", c.seed},
                {"checkpoints", c.checkpoints},
                {"eval_episodes", c.eval_episodes},
                {"divergence_factor", c.divergence_factor},
                {"divergence_patience", c.divergence_patience}};
}

std::uint64_t config_hash(const TrainConfig& c) { return fnv1a64(to_json(c).dump()); }

namespace {

template <typename T>
LossTerms loss_impl(const BasicPolicyNetwork<T>& net, const LossBatch<T>& b, double value_coef, double entropy_coef,
                    std::span<T> grad, typename BasicPolicyNetwork<T>::Cache& c,
                    typename BasicPolicyNetwork<T>::Matrix& probs) {
    using Matrix = typename BasicPolicyNetwork<T>::Matrix;
    const int A = net.action_count();
    const auto B = b.features.cols();
    if (b.mask.size() != static_cast<std::size_t>(A * B) || b.actions.size() != static_cast<std::size_t>(B) ||
        b.advantages.size() != static_cast<std::size_t>(B) || b.returns.size() != static_cast<std::size_t>(B)) {
        throw ContractViolation("a2c_loss: batch size mismatch");
    }
    net.forward(b.features, c);
    probs.resize(A, B);
    Matrix dlog = Matrix::Zero(A, B);
    Matrix dv(1, B);
    const T invB = T(1) / static_cast<T>(B);
    const T ec = static_cast<T>(entropy_coef);
    const T vc = static_cast<T>(value_coef);
    LossTerms out;
    for (Eigen::Index i = 0; i < B; ++i) {
        const std::uint8_t* m = &b.mask[static_cast<std::size_t>(i * A)];
        T* p = &probs(0, i);
        masked_softmax(&c.logits(0, i), m, A, p);
        const int a = b.actions[static_cast<std::size_t>(i)];
        if (a < 0 || a >= A || !m[a]) throw ContractViolation("a2c_loss: action outside the legal mask");
        T H = 0;
        for (int j = 0; j < A; ++j) {
            if (m[j] && p[j] > T(0)) H -= p[j] * std::log(p[j]);
        }
        const T adv = b.advantages[static_cast<std::size_t>(i)];
        const T logp = std::log(std::max(p[a], std::numeric_limits<T>::min()));
        const T err = c.values(0, i) - b.returns[static_cast<std::size_t>(i)];
        out.policy -= static_cast<double>(adv * logp);
        out.entropy += static_cast<double>(H);
        out.value += 0.5 * static_cast<double>(err * err);
        for (int j = 0; j < A; ++j) {
            if (!m[j]) continue;
            const T plogp = p[j] > T(0) ? p[j] * std::log(p[j]) : T(0);
            dlog(j, i) = (-adv * ((j == a ? T(1) : T(0)) - p[j]) + ec * (plogp + p[j] * H)) * invB;
        }
        dv(0, i) = vc * err * invB;
    }
    out.policy /= static_cast<double>(B);
    out.entropy /= static_cast<double>(B);
    out.value /= static_cast<double>(B);
    out.total = out.policy + value_coef * out.value - entropy_coef * out.entropy;
    if (!grad.empty()) net.backward(c, dlog, dv, grad);
    return out;
}

}  // namespace

template <typename T>
LossTerms a2c_loss(const BasicPolicyNetwork<T>& net, const LossBatch<T>& batch, double value_coef, double entropy_coef,
                   std::span<T> grad) {
    typename BasicPolicyNetwork<T>::Cache c;
    typename BasicPolicyNetwork<T>::Matrix probs;
    return loss_impl(net, batch, value_coef, entropy_coef, grad, c, probs);
}

template LossTerms a2c_loss<float>(const BasicPolicyNetwork<float>&, const LossBatch<float>&, double, double,
                                   std::span<float>);
template LossTerms a2c_loss<double>(const BasicPolicyNetwork<double>&, const LossBatch<double>&, double, double,
                                    std::span<double>);

namespace {

struct Adam {
    std::vector<float> m, v;
    std::int64_t t = 0;
    static constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-5;

    void step(std::span<float> params, std::span<const float> g, double lr) {
        if (m.empty()) {
            m.assign(params.size(), 0.0f);
            v.assign(params.size(), 0.0f);
        }
        ++t;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
        const float step = static_cast<float>(lr * std::sqrt(c2) / c1);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = static_cast<float>(b1) * m[i] + static_cast<float>(1.0 - b1) * g[i];
            v[i] = static_cast<float>(b2) * v[i] + static_cast<float>(1.0 - b2) * g[i] * g[i];
            params[i] -= step * m[i] / (std::sqrt(v[i]) + static_cast<float>(eps));
        }
    }
};

// Kronecker-factored curvature per dense layer: F_l ~ G_l (x) A_l, with A from layer
// inputs (plus a bias row) and G from pre-activation gradients of the sampled-target loss.
class Kfac {
public:
    explicit Kfac(const TrainConfig& cfg) : cfg_(cfg) {}

    void update_stats(const PolicyNetwork& net, const PolicyNetwork::Cache& c, const Eigen::MatrixXf& probs,
                      const std::vector<std::uint8_t>& mask, Rng& rng) {
        const int A = net.action_count();
        const auto B = probs.cols();
        Eigen::MatrixXf dlog = Eigen::MatrixXf::Zero(A, B);
        Eigen::MatrixXf dv(1, B);
        for (Eigen::Index i = 0; i < B; ++i) {
            std::span<const float> p(&probs(0, i), static_cast<std::size_t>(A));
            const int a = select_action(p, ActMode::Sample, rng);
            for (int j = 0; j < A; ++j) {
                if (mask[static_cast<std::size_t>(i * A + j)]) dlog(j, i) = probs(j, i) - (j == a ? 1.0f : 0.0f);
            }
            dv(0, i) = static_cast<float>(standard_normal(rng));
        }
        std::vector<float> scratch(net.parameter_count(), 0.0f);
        PolicyNetwork::LayerSignals sig;
        net.backward(c, dlog, dv, scratch, &sig);

        const int trunk = static_cast<int>(net.hidden().size());
        const int L = trunk + 2;
        const bool first = A_.empty();
        if (first) {
            A_.resize(static_cast<std::size_t>(L));
            G_.resize(static_cast<std::size_t>(L));
            Ainv_.resize(static_cast<std::size_t>(L));
            Ginv_.resize(static_cast<std::size_t>(L));
        }
        const float d = static_cast<float>(cfg_.kfac_stat_decay);
        const float invB = 1.0f / static_cast<float>(B);
        for (int l = 0; l < L; ++l) {
            const auto& x = c.inputs[static_cast<std::size_t>(std::min(l, trunk))];
            Eigen::MatrixXf xa(x.rows() + 1, B);
            xa.topRows(x.rows()) = x;
            xa.bottomRows(1).setOnes();
            Eigen::MatrixXf a_new = (xa * xa.transpose()) * invB;
            const auto& g = sig.dpre[static_cast<std::size_t>(l)];
            Eigen::MatrixXf g_new = (g * g.transpose()) * invB;
            auto& Af = A_[static_cast<std::size_t>(l)];
            auto& Gf = G_[static_cast<std::size_t>(l)];
            if (first) {
                Af = std::move(a_new);
                Gf = std::move(g_new);
            } else {
                Af = d * Af + (1.0f - d) * a_new;
                Gf = d * Gf + (1.0f - d) * g_new;
            }
        }
        if (first || ++since_inverse_ >= cfg_.kfac_inverse_every) {
            since_inverse_ = 0;
            const double damp = std::sqrt(cfg_.kfac_damping);
            for (int l = 0; l < L; ++l) {
                Ainv_[static_cast<std::size_t>(l)] = damped_inverse(A_[static_cast<std::size_t>(l)], damp);
                Ginv_[static_cast<std::size_t>(l)] = damped_inverse(G_[static_cast<std::size_t>(l)], damp);
            }
        }
    }

    // Preconditioned momentum step with the KL trust-region scaling.
    void step(PolicyNetwork& net, std::span<const float> grad, double lr) {
        const int L = static_cast<int>(net.layers().size());
        std::vector<float> nat(grad.size(), 0.0f);
        double q = 0.0;
        for (int l = 0; l < L; ++l) {
            const auto& ly = net.layers()[static_cast<std::size_t>(l)];
            Eigen::MatrixXf M(ly.out, ly.in + 1);
            M.leftCols(ly.in) = Eigen::Map<const Eigen::MatrixXf>(grad.data() + ly.w, ly.out, ly.in);
            M.rightCols(1) = Eigen::Map<const Eigen::VectorXf>(grad.data() + ly.b, ly.out);
            Eigen::MatrixXf P = Ginv_[static_cast<std::size_t>(l)] * M * Ainv_[static_cast<std::size_t>(l)];
            q += static_cast<double>((M.array() * P.array()).sum());
            Eigen::Map<Eigen::MatrixXf>(nat.data() + ly.w, ly.out, ly.in) = P.leftCols(ly.in);
            Eigen::Map<Eigen::VectorXf>(nat.data() + ly.b, ly.out) = P.rightCols(1);
        }
        const double nu = q > 0.0 ? std::min(1.0, std::sqrt(2.0 * cfg_.kfac_max_kl / (lr * lr * q))) : 1.0;
        if (vel_.empty()) vel_.assign(grad.size(), 0.0f);
        auto p = net.parameters();
        const float mom = static_cast<float>(cfg_.momentum);
        const float s = static_cast<float>(lr * nu);
        for (std::size_t i = 0; i < p.size(); ++i) {
            vel_[i] = mom * vel_[i] + s * nat[i];
            p[i] -= vel_[i];
        }
    }

private:
    static Eigen::MatrixXf damped_inverse(const Eigen::MatrixXf& m, double damp) {
        Eigen::MatrixXd md = m.cast<double>();
        md.diagonal().array() += damp;
        return md.llt().solve(Eigen::MatrixXd::Identity(md.rows(), md.cols())).cast<float>();
    }

    const TrainConfig& cfg_;
    std::vector<Eigen::MatrixXf> A_, G_, Ainv_, Ginv_;
    std::vector<float> vel_;
    int since_inverse_ = 0;
};

double global_norm(std::span<const float> g) {
    double s = 0.0;
    for (float v : g) s += static_cast<double>(v) * v;
    return std::sqrt(s);
}

}  // namespace

TrainResult train_actor_critic(const EnvFactory& factory, const TrainConfig& cfg, const PolicyNetwork* init,
                               const CheckpointCallback& on_checkpoint) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto env = factory(cfg.envs, derive_seed(cfg.seed, 0x656e76ULL));
    const int S = env->slots();
    const int F = env->feature_dim();
    const int A = env->action_count();
    const int n = cfg.n_steps;
    const double gamma = env->discount();

    TrainResult res;
    if (init) {
        if (init->input_dim() != F || init->action_count() != A) {
            throw ConfigError("train: initial network does not match the environment");
        }
        res.net = *init;
    } else {
        res.net = PolicyNetwork(F, cfg.hidden, A, derive_seed(cfg.seed, 0x6e6574ULL));
    }
    PolicyNetwork& net = res.net;
    Rng act_rng(derive_seed(cfg.seed, 0x616374ULL));
    Rng fisher_rng(derive_seed(cfg.seed, 0x666973ULL));

    const std::int64_t per_update = static_cast<std::int64_t>(S) * n;
    const std::int64_t U = std::max<std::int64_t>(1, (cfg.total_steps + per_update - 1) / per_update);
    const int K = static_cast<int>(std::min<std::int64_t>(cfg.checkpoints, U));

    LossBatch<float> batch;
    batch.features.resize(F, static_cast<Eigen::Index>(S) * n);
    batch.mask.resize(static_cast<std::size_t>(A) * S * n);
    batch.actions.resize(static_cast<std::size_t>(S) * n);
    batch.advantages.resize(static_cast<std::size_t>(S) * n);
    batch.returns.resize(static_cast<std::size_t>(S) * n);
    std::vector<double> rewards(static_cast<std::size_t>(S) * n);
    std::vector<std::uint8_t> dones(static_cast<std::size_t>(S) * n);
    std::vector<float> values(static_cast<std::size_t>(S) * n);
    std::vector<float> grad(net.parameter_count());
    std::vector<float> probs(static_cast<std::size_t>(A));
    Eigen::MatrixXf last_obs(F, S);
    std::vector<std::uint8_t> last_mask(static_cast<std::size_t>(A) * S);
    PolicyNetwork::Cache cache;

    Adam adam;
    Kfac kfac(cfg);
    LossTerms window{};
    double window_reward = 0.0;
    std::int64_t window_updates = 0;
    double initial_value_loss = -1.0;
    int over = 0;
    int next_ck = 1;

    for (std::int64_t u = 0; u < U; ++u) {
        const double lr = cfg.lr + (cfg.lr_final - cfg.lr) * static_cast<double>(u) / static_cast<double>(U);
        for (int t = 0; t < n; ++t) {
            const std::size_t col = static_cast<std::size_t>(t) * S;
            auto obs = std::span<float>(batch.features.data() + col * F, static_cast<std::size_t>(F) * S);
            auto msk = std::span<std::uint8_t>(batch.mask.data() + col * A, static_cast<std::size_t>(A) * S);
            env->observe(obs, msk);
            net.forward(batch.features.middleCols(static_cast<Eigen::Index>(col), S), cache);
            std::vector<int> acts(static_cast<std::size_t>(S));
            for (int i = 0; i < S; ++i) {
                const std::uint8_t* m = &msk[static_cast<std::size_t>(i) * A];
                masked_softmax(&cache.logits(0, i), m, A, probs.data());
                const int a = select_action(probs, ActMode::Sample, act_rng);
                ++res.actions_executed;
                if (!m[a]) ++res.illegal_actions;
                acts[static_cast<std::size_t>(i)] = a;
                batch.actions[col + static_cast<std::size_t>(i)] = a;
                values[col + static_cast<std::size_t>(i)] = cache.values(0, i);
            }
            env->step(acts, std::span<double>(rewards.data() + col, static_cast<std::size_t>(S)),
                      std::span<std::uint8_t>(dones.data() + col, static_cast<std::size_t>(S)));
        }
        env->observe(std::span<float>(last_obs.data(), last_obs.size()), last_mask);
        const Eigen::VectorXf boot = value_estimate(net, last_obs);
        double reward_sum = 0.0;
        for (int i = 0; i < S; ++i) {
            double R = boot(i);
            for (int t = n - 1; t >= 0; --t) {
                const std::size_t k = static_cast<std::size_t>(t) * S + static_cast<std::size_t>(i);
                reward_sum += rewards[k];
                R = rewards[k] * cfg.reward_scale + (dones[k] ? 0.0 : gamma * R);
                batch.returns[k] = static_cast<float>(R);
                batch.advantages[k] = static_cast<float>(R - values[k]);
            }
        }

        std::fill(grad.begin(), grad.end(), 0.0f);
        Eigen::MatrixXf pm;
        const LossTerms lt = loss_impl<float>(net, batch, cfg.value_coef, cfg.entropy_coef, grad, cache, pm);
        if (!std::isfinite(lt.total)) throw TrainingDiverged("train: non-finite loss at update " + std::to_string(u));
        if (cfg.natural_gradient) {
            kfac.update_stats(net, cache, pm, batch.mask, fisher_rng);
            kfac.step(net, grad, lr);
        } else {
            const double gn = global_norm(grad);
            if (cfg.max_grad_norm > 0.0 && gn > cfg.max_grad_norm) {
                const float s = static_cast<float>(cfg.max_grad_norm / gn);
                for (auto& g : grad) g *= s;
            }
            adam.step(net.parameters(), grad, lr);
        }
        window.policy += lt.policy;
        window.value += lt.value;
        window.entropy += lt.entropy;
        window_reward += reward_sum / static_cast<double>(per_update);
        ++window_updates;

        if (u + 1 == U * next_ck / K) {
            CheckpointMetrics ck;
            ck.steps = (u + 1) * per_update;
            ck.updates = u + 1;
            ck.policy_loss = window.policy / static_cast<double>(window_updates);
            ck.value_loss = window.value / static_cast<double>(window_updates);
            ck.entropy = window.entropy / static_cast<double>(window_updates);
            ck.mean_reward = window_reward / static_cast<double>(window_updates);
            ck.lr = lr;
            ck.eval_return = std::numeric_limits<double>::quiet_NaN();
            if (cfg.eval_episodes > 0) {
                const auto ev = evaluate_policy(net, factory, cfg.eval_episodes, derive_seed(cfg.seed, 0x6576616cULL),
                                                ActMode::Sample);
                ck.eval_return = ev.mean;
                ck.eval_sd = ev.sd;
            }
            ck.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            res.curve.push_back(ck);
            if (on_checkpoint) on_checkpoint(net, ck);

            if (initial_value_loss < 0.0) {
                initial_value_loss = ck.value_loss;
            } else if (ck.value_loss > cfg.divergence_factor * initial_value_loss) {
                if (++over >= cfg.divergence_patience) {
                    throw TrainingDiverged("train: value loss " + format_double(ck.value_loss) + " above " +
                                           format_double(cfg.divergence_factor) + "x initial " +
                                           format_double(initial_value_loss) + " for " + std::to_string(over) +
                                           " checkpoints");
                }
            } else {
                over = 0;
            }
            window = {};
            window_reward = 0.0;
            window_updates = 0;
            ++next_ck;
        }
    }
    return res;
}

EvalResult evaluate_policy(const PolicyNetwork& net, const EnvFactory& factory, int episodes, std::uint64_t seed,
                           ActMode mode, int slots) {
    if (episodes < 1) throw ContractViolation("evaluate_policy: episodes must be >= 1");
    if (slots <= 0) slots = episodes + (episodes % 2);
    auto env = factory(slots, seed);
    const int S = env->slots();
    const int F = env->feature_dim();
    const int A = env->action_count();
    const double gamma = env->discount();
    Rng rng(derive_seed(seed, 0x616374ULL));
    Eigen::MatrixXf obs(F, S);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(A) * S);
    std::vector<int> acts(static_cast<std::size_t>(S));
    std::vector<double> r(static_cast<std::size_t>(S));
    std::vector<std::uint8_t> done(static_cast<std::size_t>(S));
    std::vector<double> ret(static_cast<std::size_t>(S), 0.0), disc(static_cast<std::size_t>(S), 1.0);
    std::vector<std::uint8_t> counting(static_cast<std::size_t>(S), 1);
    std::vector<float> p(static_cast<std::size_t>(A));
    std::vector<double> finished;
    int started = S;
    PolicyNetwork::Cache cache;
    while (static_cast<int>(finished.size()) < episodes) {
        env->observe(std::span<float>(obs.data(), obs.size()), mask);
        net.forward(obs, cache);
        for (int i = 0; i < S; ++i) {
            masked_softmax(&cache.logits(0, i), &mask[static_cast<std::size_t>(i) * A], A, p.data());
            acts[static_cast<std::size_t>(i)] = select_action(p, mode, rng);
        }
        env->step(acts, r, done);
        for (std::size_t i = 0; i < static_cast<std::size_t>(S); ++i) {
            if (!counting[i]) continue;
            ret[i] += disc[i] * r[i];
            disc[i] *= gamma;
            if (done[i]) {
                finished.push_back(ret[i]);
                ret[i] = 0.0;
                disc[i] = 1.0;
                counting[i] = started < episodes ? 1 : 0;
                if (counting[i]) ++started;
            }
        }
    }
    finished.resize(static_cast<std::size_t>(episodes));
    EvalResult e;
    e.episodes = episodes;
    for (double v : finished) e.mean += v;
    e.mean /= episodes;
    for (double v : finished) e.sd += (v - e.mean) * (v - e.mean);
    e.sd = episodes > 1 ? std::sqrt(e.sd / (episodes - 1)) : 0.0;
    return e;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<CheckpointMetrics>& curve) {
    CsvTable t;
    t.header = {"steps", "updates", "policy_loss", "value_loss", "entropy", "mean_reward", "eval_return", "eval_sd",
                "lr"};
    for (const auto& c : curve) {
        t.add_row({std::to_string(c.steps), std::to_string(c.updates), format_double(c.policy_loss),
                   format_double(c.value_loss), format_double(c.entropy), format_double(c.mean_reward),
                   format_double(c.eval_return), format_double(c.eval_sd), format_double(c.lr)});
    }
    t.save(path);
}

namespace {
constexpr char kMagic[4] = {'L', 'C', 'M', 'P'};

template <typename V>
void put(std::ofstream& f, V v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(V));
}
template <typename V>
V take(std::ifstream& f, const std::filesystem::path& p) {
    V v{};
    if (!f.read(reinterpret_cast<char*>(&v), sizeof(V))) throw ConfigError("checkpoint truncated: " + p.string());
    return v;
}
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const PolicyNetwork& net, std::uint64_t hash) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write checkpoint: " + path.string());
    f.write(kMagic, 4);
    put<std::uint32_t>(f, kCheckpointVersion);
    put<std::uint64_t>(f, hash);
    put<std::uint32_t>(f, static_cast<std::uint32_t>(net.input_dim()));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(net.action_count()));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(net.hidden().size()));
    for (int h : net.hidden()) put<std::uint32_t>(f, static_cast<std::uint32_t>(h));
    put<std::uint64_t>(f, net.parameter_count());
    const auto p = net.parameters();
    f.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(float)));
    if (!f) throw ConfigError("failed writing checkpoint: " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open checkpoint: " + path.string());
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError("not a checkpoint: " + path.string());
    const auto version = take<std::uint32_t>(f, path);
    if (version != kCheckpointVersion) {
        throw ConfigError("checkpoint version " + std::to_string(version) + " unsupported: " + path.string());
    }
    LoadedCheckpoint out;
    out.config_hash = take<std::uint64_t>(f, path);
    const int in = static_cast<int>(take<std::uint32_t>(f, path));
    const int acts = static_cast<int>(take<std::uint32_t>(f, path));
    const auto nh = take<std::uint32_t>(f, path);
    if (nh == 0 || nh > 64) throw ConfigError("checkpoint has a bad layer count: " + path.string());
    std::vector<int> hidden(nh);
    for (auto& h : hidden) h = static_cast<int>(take<std::uint32_t>(f, path));
    out.net = PolicyNetwork(in, hidden, acts, 0);
    const auto count = take<std::uint64_t>(f, path);
    if (count != out.net.parameter_count()) throw ConfigError("checkpoint parameter count mismatch: " + path.string());
    auto p = out.net.parameters();
    if (!f.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(float)))) {
        throw ConfigError("checkpoint truncated: " + path.string());
    }
    return out;
}

}  // namespace lcm::solver
