#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lcm/common/errors.hpp"
#include "lcm/solver/a2c.hpp"
#include "lcm/solver/dp.hpp"
#include "lcm/solver/reduced_env.hpp"

using namespace lcm;
using namespace lcm::solver;

namespace {

const env::Model& shipped() {
    static const env::Model m = env::load_model(LCM_PARAMS_DIR, 2023);
    return m;
}

std::shared_ptr<const ReducedModel> reduced() {
    static const auto m = std::make_shared<const ReducedModel>(shipped());
    return m;
}

template <typename T>
LossBatch<T> random_batch(int F, int A, int B, Rng& rng) {
    LossBatch<T> b;
    b.features.resize(F, B);
    for (int i = 0; i < F * B; ++i) b.features.data()[i] = static_cast<T>(standard_normal(rng));
    b.mask.assign(static_cast<std::size_t>(A * B), 0);
    for (int i = 0; i < B; ++i) {
        int legal = 0;
        for (int a = 0; a < A; ++a) {
            const bool on = A <= 2 || uniform01(rng) < 0.7;
            b.mask[static_cast<std::size_t>(i * A + a)] = on;
            legal += on;
        }
        if (legal == 0) b.mask[static_cast<std::size_t>(i * A)] = 1;
        int a;
        do {
            a = static_cast<int>(uniform01(rng) * A);
        } while (!b.mask[static_cast<std::size_t>(i * A + a)]);
        b.actions.push_back(a);
        b.advantages.push_back(static_cast<T>(standard_normal(rng)));
        b.returns.push_back(static_cast<T>(standard_normal(rng)));
    }
    return b;
}

// Relative error of the analytic gradient against central differences.
double gradient_check(BasicPolicyNetwork<double>& net, const LossBatch<double>& b) {
    std::vector<double> g(net.parameter_count(), 0.0);
    a2c_loss<double>(net, b, 0.5, 0.01, g);
    auto p = net.parameters();
    double num = 0.0, den = 0.0;
    const double h = 1e-6;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + h;
        const double up = a2c_loss<double>(net, b, 0.5, 0.01, {}).total;
        p[i] = keep - h;
        const double dn = a2c_loss<double>(net, b, 0.5, 0.01, {}).total;
        p[i] = keep;
        const double fd = (up - dn) / (2 * h);
        num += (g[i] - fd) * (g[i] - fd);
        den = std::max(den, std::max(std::abs(g[i]), std::abs(fd)));
        CHECK(std::abs(g[i] - fd) <= 1e-4 * std::max(1e-3, std::abs(fd)));
    }
    return std::sqrt(num) / std::max(den, 1e-12);
}

// One step per episode; action 1 pays 1, everything else 0.
class DominatedEnv final : public VectorEnv {
public:
    DominatedEnv(int slots, std::uint64_t seed) : n_(slots), rng_(seed), x_(static_cast<std::size_t>(4 * slots)) { draw(); }
    int slots() const override { return n_; }
    int feature_dim() const override { return 4; }
    int action_count() const override { return 3; }
    double discount() const override { return 0.99; }
    void observe(std::span<float> f, std::span<std::uint8_t> m) const override {
        std::copy(x_.begin(), x_.end(), f.begin());
        std::fill(m.begin(), m.end(), 1);
    }
    void step(std::span<const int> a, std::span<double> r, std::span<std::uint8_t> d) override {
        for (int i = 0; i < n_; ++i) {
            r[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
            d[static_cast<std::size_t>(i)] = 1;
        }
        draw();
    }

private:
    void draw() {
        for (auto& v : x_) v = static_cast<float>(uniform01(rng_));
    }
    int n_;
    Rng rng_;
    std::vector<float> x_;
};

// Rewards grow without bound, so the critic can never keep up.
class ExplodingEnv final : public VectorEnv {
public:
    explicit ExplodingEnv(int slots) : n_(slots) {}
    int slots() const override { return n_; }
    int feature_dim() const override { return 2; }
    int action_count() const override { return 2; }
    double discount() const override { return 0.9; }
    void observe(std::span<float> f, std::span<std::uint8_t> m) const override {
        std::fill(f.begin(), f.end(), 1.0f);
        std::fill(m.begin(), m.end(), 1);
    }
    void step(std::span<const int>, std::span<double> r, std::span<std::uint8_t> d) override {
        ++k_;
        for (int i = 0; i < n_; ++i) {
            r[static_cast<std::size_t>(i)] = std::pow(1.05, static_cast<double>(k_));
            d[static_cast<std::size_t>(i)] = 0;
        }
    }

private:
    int n_;
    long k_ = 0;
};

EnvFactory dominated_factory() {
    return [](int slots, std::uint64_t seed) { return std::make_unique<DominatedEnv>(slots, seed); };
}

TrainConfig small_config() {
    TrainConfig c;
    c.hidden = {32, 32};
    c.envs = 32;
    c.n_steps = 4;
    c.total_steps = 40'000;
    c.lr = 3e-3;
    c.lr_final = 3e-4;
    c.reward_scale = 1.0;
    c.eval_episodes = 0;
    c.checkpoints = 4;
    return c;
}

double mean_prob_of(const PolicyNetwork& net, int action, int samples) {
    Rng rng(5);
    Eigen::MatrixXf x(4, samples);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(uniform01(rng));
    PolicyNetwork::Cache c;
    net.forward(x, c);
    double worst = 1.0;
    std::vector<std::uint8_t> m(3, 1);
    std::vector<float> p(3);
    for (int i = 0; i < samples; ++i) {
        masked_softmax(&c.logits(0, i), m.data(), 3, p.data());
        worst = std::min(worst, static_cast<double>(p[static_cast<std::size_t>(action)]));
    }
    return worst;
}

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("gradient check on a 10-parameter micro-network") {
    BasicPolicyNetwork<double> net(3, {1}, 2, 11);
    CHECK(net.parameter_count() == 10);
    Rng rng(3);
    auto p = net.parameters();
    for (auto& v : p) v = 0.5 * standard_normal(rng);
    const auto b = random_batch<double>(3, 2, 6, rng);
    CHECK(gradient_check(net, b) < 1e-4);
}

TEST_CASE("gradient check on a deeper masked network") {
    BasicPolicyNetwork<double> net(5, {6, 4}, 4, 12);
    Rng rng(4);
    const auto b = random_batch<double>(5, 4, 9, rng);
    CHECK(gradient_check(net, b) < 1e-4);
}

TEST_CASE("float and double forward passes agree") {
    PolicyNetwork net(6, {16, 8}, 5, 1);
    const auto dnet = net.cast<double>();
    Rng rng(1);
    Eigen::MatrixXf x(6, 3);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(standard_normal(rng));
    PolicyNetwork::Cache cf;
    BasicPolicyNetwork<double>::Cache cd;
    net.forward(x, cf);
    dnet.forward(x.cast<double>(), cd);
    CHECK((cf.logits.cast<double>() - cd.logits).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("masked softmax") {
    const float z[4] = {1.0f, 50.0f, -3.0f, 2.0f};
    const std::uint8_t m[4] = {1, 0, 1, 1};
    float p[4];
    masked_softmax(z, m, 4, p);
    CHECK(p[1] == 0.0f);
    CHECK(p[0] + p[2] + p[3] == doctest::Approx(1.0));
    CHECK(p[3] / p[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-5));
    const std::uint8_t none[4] = {0, 0, 0, 0};
    CHECK_THROWS_AS(masked_softmax(z, none, 4, p), ContractViolation);
}

TEST_CASE("policy_act respects masks and breaks ties low") {
    PolicyNetwork net(3, {8}, 5, 2);
    Rng rng(1);
    const std::vector<float> x{0.2f, -1.0f, 0.5f};
    std::vector<std::uint8_t> one{0, 0, 0, 1, 0};
    for (int i = 0; i < 50; ++i) CHECK(policy_act(net, x, one, ActMode::Sample, rng) == 3);
    CHECK(policy_act(net, x, one, ActMode::Greedy, rng) == 3);

    for (auto& v : net.parameters()) v = 0.0f;  // uniform logits
    std::vector<std::uint8_t> m{0, 1, 1, 0, 1};
    CHECK(policy_act(net, x, m, ActMode::Greedy, rng) == 1);
    std::vector<std::uint8_t> empty(5, 0);
    CHECK_THROWS_AS(policy_act(net, x, empty, ActMode::Sample, rng), ContractViolation);
    CHECK_THROWS_AS(policy_act(net, x, empty, ActMode::Greedy, rng), ContractViolation);
}

TEST_CASE("sampled action frequencies match the softmax") {
    PolicyNetwork net(3, {8}, 4, 3);
    net.bias(1) << 0.5f, -0.3f, 1.0f, 0.0f;
    const std::vector<float> x{0.1f, 0.7f, -0.4f};
    const std::vector<std::uint8_t> m{1, 1, 1, 1};
    PolicyNetwork::Cache c;
    net.forward(Eigen::Map<const Eigen::MatrixXf>(x.data(), 3, 1), c);
    std::vector<float> p(4);
    masked_softmax(&c.logits(0, 0), m.data(), 4, p.data());
    Rng rng(17);
    std::vector<int> count(4, 0);
    const int n = 100'000;
    for (int i = 0; i < n; ++i) ++count[static_cast<std::size_t>(policy_act(net, x, m, ActMode::Sample, rng))];
    for (int a = 0; a < 4; ++a) CHECK(std::abs(count[static_cast<std::size_t>(a)] / double(n) - p[static_cast<std::size_t>(a)]) < 0.01);
}

TEST_CASE("value estimates are finite and batch-invariant") {
    PolicyNetwork net(env::kFeatureCount, {256, 256, 128}, env::kActionCount, 9);
    Rng rng(2);
    Eigen::MatrixXf x(env::kFeatureCount, 7);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(uniform01(rng));
    const Eigen::VectorXf v = value_estimate(net, x);
    for (int i = 0; i < 7; ++i) {
        CHECK(std::isfinite(v(i)));
        const float one = value_estimate(net, std::span<const float>(x.col(i).data(), env::kFeatureCount));
        CHECK(one == doctest::Approx(v(i)).epsilon(1e-5));
    }
}

TEST_CASE("dp: horizon 1 picks the reward argmax") {
    ExplicitMdp m(1, 3, 3, 0.9);
    const double r[3][3] = {{1, 5, 2}, {4, 4, 0}, {-1, -2, -3}};
    for (int s = 0; s < 3; ++s) {
        for (int a = 0; a < 3; ++a) m.set(s, a, r[s][a], {{(s + 1) % 3, 1.0}});
    }
    m.set_terminal(0, 100.0);  // terminal values matter only after the last decision
    const auto sol = dp_solve(m);
    CHECK(sol.pi(0, 0) == 1);
    CHECK(sol.pi(0, 1) == 0);  // tie goes to the lower index
    CHECK(sol.pi(0, 2) == 0);
    CHECK(sol.V(0, 2) == doctest::Approx(-1 + 0.9 * 100.0));
}

TEST_CASE("dp: two-state toy matches the hand solution") {
    // s0: a0 pays 1 and stays; a1 pays 0 and reaches s1 w.p. 0.8.
    // s1: a0 pays 2 and stays; a1 pays 0 and returns to s0.
    ExplicitMdp m(2, 2, 2, 0.9);
    m.set(0, 0, 1.0, {{0, 1.0}});
    m.set(0, 1, 0.0, {{1, 0.8}, {0, 0.2}});
    m.set(1, 0, 2.0, {{1, 1.0}});
    m.set(1, 1, 0.0, {{0, 1.0}});
    const auto sol = dp_solve(m);
    CHECK(sol.V(1, 0) == doctest::Approx(1.0));
    CHECK(sol.V(1, 1) == doctest::Approx(2.0));
    CHECK(sol.Q(0, 0, 0) == doctest::Approx(1.9));
    CHECK(sol.Q(0, 0, 1) == doctest::Approx(0.9 * (0.8 * 2.0 + 0.2 * 1.0)));
    CHECK(sol.V(0, 0) == doctest::Approx(1.9));
    CHECK(sol.V(0, 1) == doctest::Approx(3.8));
    CHECK(sol.pi(0, 0) == 0);
    CHECK(bellman_residual(m, sol) < 1e-12);
}

TEST_CASE("dp: absorbing reward stream has the geometric closed form") {
    const int T = 40;
    const double g = 0.95;
    ExplicitMdp m(T, 1, 1, g);
    m.set(0, 0, 2.0, {{0, 1.0}});
    const auto sol = dp_solve(m);
    for (int t = 0; t <= T; ++t) CHECK(sol.V(t, 0) == doctest::Approx(2.0 * (1 - std::pow(g, T - t)) / (1 - g)).epsilon(1e-12));
}

TEST_CASE("dp: refuses oversized models and malformed tables") {
    ExplicitMdp big(1000, 2000, 1, 0.9);
    CHECK_THROWS_AS(dp_solve(big), ConfigError);
    try {
        dp_solve(big);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("2000000") != std::string::npos);
    }
    ExplicitMdp m(1, 2, 1, 0.9);
    CHECK_THROWS_AS(m.set(0, 0, 1.0, {{1, 0.5}}), ConfigError);
    CHECK_THROWS_AS(dp_solve(m), ConfigError);  // no legal action anywhere
}

TEST_CASE("reduced model: size, distributions, Bellman residual") {
    const auto& m = *reduced();
    CHECK(static_cast<long>(m.horizon()) * m.state_count() <= 100'000);
    std::vector<Transition> out;
    for (int t : {0, 100, 183, 184, 227}) {
        for (int s = 0; s < m.state_count(); ++s) {
            int legal = 0;
            for (int a = 0; a < m.action_count(); ++a) {
                if (!m.legal(t, s, a)) continue;
                ++legal;
                m.successors(t, s, a, out);
                double sum = 0.0;
                for (const auto& tr : out) sum += tr.prob;
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
                CHECK(std::isfinite(m.reward(t, s, a)));
            }
            CHECK(legal >= 1);
        }
    }
    double total = 0.0;
    for (double p : m.start_distribution()) total += p;
    CHECK(total == doctest::Approx(1.0));

    const auto par = dp_solve(m);
    const auto ser = dp_solve_serial(m);
    CHECK(par.value == ser.value);
    CHECK(par.policy == ser.policy);
    CHECK(bellman_residual(m, par) < 1e-10);
}

TEST_CASE("reduced env sampler agrees with the DP model") {
    const auto m = reduced();
    const auto sol = dp_solve(*m);
    const int n = 4000;
    ReducedEnv env(m, n, 21);
    std::vector<int> act(n);
    std::vector<double> r(n), ret(n, 0.0), disc(n, 1.0);
    std::vector<std::uint8_t> done(n, 0), live(n, 1);
    for (int step = 0; step < m->horizon(); ++step) {
        for (int i = 0; i < n; ++i) act[static_cast<std::size_t>(i)] = sol.pi(env.time(i), env.state(i));
        env.step(act, r, done);
        for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
            ret[i] += disc[i] * r[i];
            disc[i] *= m->discount();
        }
    }
    for (auto d : done) CHECK(d == 1);
    double mean = 0.0, var = 0.0;
    for (double v : ret) mean += v / n;
    for (double v : ret) var += (v - mean) * (v - mean) / (n - 1);
    CHECK(std::abs(mean - dp_start_value(*m, sol)) < 4.0 * std::sqrt(var / n));
}

TEST_CASE("actor-critic learns a dominated action") {
    const auto res = train_actor_critic(dominated_factory(), small_config());
    CHECK(res.illegal_actions == 0);
    CHECK(res.actions_executed >= 40'000);
    CHECK(mean_prob_of(res.net, 1, 200) >= 0.99);
}

TEST_CASE("natural-gradient toggle learns a dominated action") {
    auto c = small_config();
    c.natural_gradient = true;
    c.lr = 0.25;
    c.lr_final = 0.25;
    const auto res = train_actor_critic(dominated_factory(), c);
    CHECK(mean_prob_of(res.net, 1, 200) >= 0.99);
}

TEST_CASE("training is deterministic per seed; checkpoints round-trip") {
    auto c = small_config();
    c.total_steps = 5'000;
    const auto a = train_actor_critic(dominated_factory(), c);
    const auto b = train_actor_critic(dominated_factory(), c);
    CHECK(a.net == b.net);
    c.seed = 2;
    const auto d = train_actor_critic(dominated_factory(), c);
    CHECK_FALSE(a.net == d.net);

    const auto dir = std::filesystem::temp_directory_path() / "lcm_test_solver";
    std::filesystem::create_directories(dir);
    save_checkpoint(dir / "a.ckpt", a.net, config_hash(c));
    save_checkpoint(dir / "b.ckpt", b.net, config_hash(c));
    CHECK(file_bytes(dir / "a.ckpt") == file_bytes(dir / "b.ckpt"));
    const auto loaded = load_checkpoint(dir / "a.ckpt");
    CHECK(loaded.net == a.net);
    CHECK(loaded.config_hash == config_hash(c));

    const auto bytes = file_bytes(dir / "a.ckpt");
    {
        std::ofstream f(dir / "short.ckpt", std::ios::binary);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), ConfigError);
    {
        std::ofstream f(dir / "junk.ckpt", std::ios::binary);
        f << "not a checkpoint";
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckpt"), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("train config validation and JSON round trip") {
    TrainConfig c;
    c.total_steps = 1234;
    c.natural_gradient = true;
    c.hidden = {8, 4};
    const auto back = train_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(config_hash(back) == config_hash(c));
    c.seed = 7;
    CHECK(config_hash(back) != config_hash(c));
    CHECK_THROWS_AS(train_config_from_json(Json{{"total_steps", 0}}), ConfigError);
    CHECK_THROWS_AS(train_config_from_json(Json{{"reward_scale", 0.0}}), ConfigError);
    CHECK_THROWS_AS(train_config_from_json(Json{{"reward_scale", -1.0}}), ConfigError);
}

TEST_CASE("divergence detector aborts training") {
    auto c = small_config();
    c.total_steps = 200'000;
    c.checkpoints = 20;
    c.hidden = {8};
    EnvFactory f = [](int slots, std::uint64_t) { return std::make_unique<ExplodingEnv>(slots); };
    CHECK_THROWS_AS(train_actor_critic(f, c), TrainingDiverged);
}

TEST_CASE("life-cycle env: short training stays legal") {
    auto model = std::make_shared<const env::Model>(shipped());
    auto factory = lifecycle_factory(model);
    TrainConfig c;
    c.hidden = {32, 32};
    c.envs = 32;
    c.total_steps = 20'000;
    c.eval_episodes = 20;
    c.checkpoints = 2;
    std::vector<CheckpointMetrics> seen;
    const auto res = train_actor_critic(factory, c, nullptr, [&](const PolicyNetwork&, const CheckpointMetrics& m) {
        seen.push_back(m);
    });
    CHECK(res.illegal_actions == 0);
    REQUIRE(seen.size() == 2);
    for (const auto& m : seen) {
        CHECK(std::isfinite(m.eval_return));
        CHECK(std::isfinite(m.value_loss));
    }
    auto env = factory(8, 3);
    auto* lc = dynamic_cast<LifeCycleEnv*>(env.get());
    REQUIRE(lc);
    std::vector<float> f(static_cast<std::size_t>(env::kFeatureCount) * 8);
    std::vector<std::uint8_t> m(static_cast<std::size_t>(env::kActionCount) * 8);
    std::vector<int> a(8);
    std::vector<double> r(8);
    std::vector<std::uint8_t> d(8);
    Rng rng(1);
    for (int k = 0; k < 300; ++k) {
        env->observe(f, m);
        for (int i = 0; i < 8; ++i) {
            a[static_cast<std::size_t>(i)] = policy_act(res.net, std::span<const float>(f).subspan(static_cast<std::size_t>(i) * env::kFeatureCount, env::kFeatureCount),
                                 std::span<const std::uint8_t>(m).subspan(static_cast<std::size_t>(i) * env::kActionCount, env::kActionCount),
                                 ActMode::Sample, rng);
        }
        env->step(a, r, d);
    }
    CHECK(lc->audit().violations() == 0);
    CHECK(lc->audit().total() > 0);
}
