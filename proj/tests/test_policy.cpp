#include <cmath>
#include <filesystem>

#include "aifnav/envsim/wanderer.hpp"
#include "aifnav/policy/diffusion.hpp"
#include "gradcheck.hpp"
#include "doctest.h"

using namespace aifnav;
using namespace aifnav::policy;
using ag::Var;
using ag::constant;

namespace {

// Zeroes the output head so the net predicts exactly `bias` per channel.
void force_head(DenoiserNet& net, float bias) {
    Tensor& W = net.out_conv.W->value;
    for (int64_t i = 0; i < W.size(); ++i) W[i] = 0.0f;
    Tensor& b = net.out_conv.b->value;
    for (int64_t i = 0; i < b.size(); ++i) b[i] = bias;
}

DenoiserConfig tiny_config() {
    DenoiserConfig c;
    c.horizon = 6;
    c.base_ch = 4;
    c.cond_dim = 16;
    c.step_emb_dim = 8;
    c.n_keypoints = 8;
    return c;
}

}  // namespace

TEST_SUITE_BEGIN("policy");

TEST_CASE("noise schedule: squared cosine invariants") {
    CHECK_THROWS(make_schedule(1));
    CHECK_THROWS(make_schedule(10, "linear"));

    NoiseSchedule s = make_schedule(100);
    REQUIRE(s.K == 100);
    CHECK(s.alpha_bar[0] == doctest::Approx(1.0f));
    CHECK(s.alpha_bar[1] > 0.99f);
    CHECK(s.alpha_bar[100] < 0.01f);
    for (int k = 1; k <= 100; ++k) {
        CHECK(s.alpha[k] > 0.0f);
        CHECK(s.alpha[k] < 1.0f);
        CHECK(s.alpha_bar[k] < s.alpha_bar[k - 1]);
        CHECK(s.alpha_bar[k] ==
              doctest::Approx(s.alpha_bar[k - 1] * s.alpha[k]).epsilon(1e-5));
        float var = (1.0f - s.alpha_bar[k - 1]) / (1.0f - s.alpha_bar[k]) * (1.0f - s.alpha[k]);
        if (k == 1)
            CHECK(s.sigma[k] == 0.0f);
        else
            CHECK(s.sigma[k] == doctest::Approx(std::sqrt(var)).epsilon(1e-4));
    }

    NoiseSchedule s2 = make_schedule(2);
    CHECK(s2.alpha_bar[1] > s2.alpha_bar[2]);
}

TEST_CASE("noising formula") {
    NoiseSchedule s = make_schedule(100);
    Tensor a0({2, 4});
    for (int i = 0; i < 8; ++i) a0[i] = 0.3f * i - 1.0f;

    SUBCASE("zero noise scales by sqrt(alpha_bar)") {
        Tensor eps = Tensor::zeros({2, 4});
        Var out = noising(constant(a0), 40, eps, s);
        for (int i = 0; i < 8; ++i)
            CHECK(out->value[i] == doctest::Approx(std::sqrt(s.alpha_bar[40]) * a0[i]));
    }
    SUBCASE("zero signal scales noise by sqrt(1 - alpha_bar)") {
        Tensor eps({2, 4});
        Rng rng(3);
        rng.fill_normal(eps);
        Var out = noising(constant(Tensor::zeros({2, 4})), 40, eps, s);
        for (int i = 0; i < 8; ++i)
            CHECK(out->value[i] == doctest::Approx(std::sqrt(1.0f - s.alpha_bar[40]) * eps[i]));
    }
    SUBCASE("round trip: earliest step leaves a0 nearly unchanged") {
        Tensor eps({2, 4});
        for (int i = 0; i < 8; ++i) eps[i] = (i % 2 == 0) ? 1.0f : -1.0f;  // unit-scale noise
        Var out = noising(constant(a0), 1, eps, s);
        for (int i = 0; i < 8; ++i) CHECK(std::fabs(out->value[i] - a0[i]) < 0.05f);
    }
    SUBCASE("Monte-Carlo variance matches 1 - alpha_bar") {
        const int k = 60, n = 10000;
        Rng rng(5);
        double m = 0.0, m2 = 0.0;
        for (int i = 0; i < n; ++i) {
            Tensor eps({1, 1});
            eps[0] = rng.normal();
            Var out = noising(constant(Tensor::full({1, 1}, 0.7f)), k, eps, s);
            m += out->value[0];
            m2 += static_cast<double>(out->value[0]) * out->value[0];
        }
        double var = m2 / n - (m / n) * (m / n);
        CHECK(var == doctest::Approx(1.0f - s.alpha_bar[k]).epsilon(0.05));
    }
    SUBCASE("k out of range rejected") {
        CHECK_THROWS(noising(constant(a0), 0, Tensor::zeros({2, 4}), s));
        CHECK_THROWS(noising(constant(a0), 101, Tensor::zeros({2, 4}), s));
    }
}

TEST_CASE("dp_loss: zero head gives unit loss, always non-negative") {
    NoiseSchedule s = make_schedule(100);
    DenoiserNet net(tiny_config(), 17);
    force_head(net, 0.0f);

    Rng rng(9);
    Tensor obs({16, 6, env::kObsH, env::kObsW});
    rng.fill_uniform(obs, 0.0f, 1.0f);
    Tensor a0({16, 2, 6});
    rng.fill_normal(a0);

    double acc = 0.0;
    for (int rep = 0; rep < 4; ++rep) {
        Var loss = dp_loss(net, obs, a0, s, rng);
        CHECK(loss->value[0] >= 0.0f);
        acc += loss->value[0];
    }
    // MSE against fresh standard-normal noise with a zero prediction.
    CHECK(acc / 4 == doctest::Approx(1.0).epsilon(0.12));
}

TEST_CASE("dp_loss gradient passes the finite-difference check on a tiny net") {
    NoiseSchedule s = make_schedule(10);
    DenoiserNet net(tiny_config(), 23);

    Rng drng(31);
    Tensor obs({2, 6, env::kObsH, env::kObsW});
    drng.fill_uniform(obs, 0.0f, 1.0f);
    Tensor a0({2, 2, 6});
    drng.fill_normal(a0);

    // Fresh rng per evaluation keeps (k, eps) draws identical across the
    // finite-difference probes.
    auto f = [&](const std::vector<Var>&) {
        Rng rng(77);
        return dp_loss(net, obs, a0, s, rng);
    };
    std::vector<Var> probed = {net.out_conv.b, net.up2b.cond_proj.b, net.obs_proj.b,
                               net.in_block.norm.gamma};
    net.params.zero_grad();
    auto res = aifnav::testutil::gradcheck(f, probed, 1e-2f, 2e-3);
    INFO("worst rel err " << res.worst_rel);
    CHECK(res.failed == 0);
}

TEST_CASE("ddpm_step: formula degeneration and scalar-recursion oracle") {
    NoiseSchedule s = make_schedule(20);
    DenoiserNet net(tiny_config(), 41);
    const float bias = 0.25f;
    force_head(net, bias);  // eps_hat == bias everywhere

    Rng rng(11);
    Tensor a({1, 2, 6});
    rng.fill_normal(a);
    std::vector<int> kvec{1};
    Var cond = net.condition(net.encode_obs(constant(Tensor::zeros({1, 6, 24, 32}))), kvec, s.K);

    SUBCASE("k = 1 collapses to (a - c*eps_hat)/sqrt(alpha_1), no noise") {
        Tensor out = ddpm_step(net, a, 1, cond, s, rng);
        float c = (1.0f - s.alpha[1]) / std::sqrt(1.0f - s.alpha_bar[1]);
        for (int64_t i = 0; i < a.size(); ++i)
            CHECK(out[i] == doctest::Approx((a[i] - c * bias) / std::sqrt(s.alpha[1])));
    }
    SUBCASE("sigma forced to zero makes the step bitwise deterministic") {
        NoiseSchedule s0 = s;
        for (auto& v : s0.sigma) v = 0.0f;
        Rng r1(5), r2(5);
        Tensor o1 = ddpm_step(net, a, 7, cond, s0, r1);
        Tensor o2 = ddpm_step(net, a, 7, cond, s0, r2);
        for (int64_t i = 0; i < o1.size(); ++i) CHECK(o1[i] == o2[i]);
    }
    SUBCASE("full reverse pass matches a hand-rolled scalar recursion") {
        NoiseSchedule s0 = s;
        for (auto& v : s0.sigma) v = 0.0f;
        Tensor cur = a.clone();
        for (int k = s.K; k >= 1; --k) cur = ddpm_step(net, cur, k, cond, s0, rng);
        // scalar oracle: x <- (x - (1-a_k)/sqrt(1-abar_k)*bias)/sqrt(a_k)
        for (int64_t i = 0; i < a.size(); ++i) {
            double x = a[i];
            for (int k = s.K; k >= 1; --k) {
                double c = (1.0 - s.alpha[k]) / std::sqrt(1.0 - s.alpha_bar[k]);
                x = (x - c * bias) / std::sqrt(static_cast<double>(s.alpha[k]));
            }
            CHECK(cur[i] == doctest::Approx(x).epsilon(1e-5));
        }
    }
}

TEST_CASE("ddim_sample: shape, determinism, bounds") {
    Policy p;
    p.cfg = PolicyConfig{};
    p.cfg.T_F = 16;
    p.sched = make_schedule(p.cfg.K_train);
    DenoiserConfig dc;
    dc.horizon = p.cfg.horizon();
    p.net = std::make_shared<DenoiserNet>(dc, 3);
    p.act_mean[0] = 0.15f;
    p.act_mean[1] = 0.0f;
    p.act_std[0] = 0.1f;
    p.act_std[1] = 0.5f;

    Tensor obs({6, env::kObsH, env::kObsW});
    Rng orng(2);
    orng.fill_uniform(obs, 0.0f, 1.0f);

    Rng r1(99), r2(99);
    Tensor c1 = ddim_sample(p, obs, 8, 10, r1);
    Tensor c2 = ddim_sample(p, obs, 8, 10, r2);
    REQUIRE(c1.shape() == std::vector<int>{8, 2, 18});
    for (int64_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == c2[i]);

    const int T = 18;
    for (int n = 0; n < 8; ++n)
        for (int t = 0; t < T; ++t) {
            float v = c1[(n * 2 + 0) * T + t];
            float w = c1[(n * 2 + 1) * T + t];
            CHECK(v >= 0.0f);
            CHECK(v <= p.cfg.v_max);
            CHECK(std::fabs(w) <= p.cfg.omega_max);
        }

    CHECK_THROWS(ddim_sample(p, obs, 8, p.cfg.K_train + 1, r1));
}

TEST_CASE("policy checkpoint round trip reproduces samples") {
    env::WorldSpec world = env::WorldSpec::default_world();
    env::Dataset data = env::wanderer_collect(world, 13, 1, 80, 0.2f);

    PolicyConfig cfg;
    cfg.steps = 3;
    cfg.batch = 4;
    cfg.seed = 5;
    Policy p = train_policy(data, cfg);

    auto dir = std::filesystem::temp_directory_path() / "aifnav_test_policy";
    std::filesystem::remove_all(dir);
    p.save(dir.string());
    Policy q = Policy::load(dir.string());
    CHECK(q.cfg.T_F == cfg.T_F);
    CHECK(q.act_mean[0] == p.act_mean[0]);
    CHECK(q.act_std[1] == p.act_std[1]);

    Tensor obs = make_obs_pair(data.obs_at(0, 0), data.obs_at(0, 1));
    Rng r1(7), r2(7);
    Tensor a = ddim_sample(p, obs, 4, 10, r1);
    Tensor b = ddim_sample(q, obs, 4, 10, r2);
    for (int64_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    std::filesystem::remove_all(dir);
}

TEST_CASE("training reduces the denoising loss on a small dataset") {
    env::WorldSpec world = env::WorldSpec::default_world();
    env::Dataset data = env::wanderer_collect(world, 21, 2, 300, 0.2f);

    PolicyConfig cfg;
    cfg.steps = 120;
    cfg.batch = 8;
    cfg.lr = 2e-3f;
    cfg.seed = 77;
    float first = -1.0f, last = -1.0f;
    train_policy(data, cfg, [&](int step, float loss) {
        if (first < 0.0f) first = loss;
        last = loss;
    }, 20);
    CHECK(first > 0.0f);
    CHECK(last < first);
    CHECK(last < 1.0f);
}

TEST_SUITE_END();
