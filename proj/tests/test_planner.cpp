#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "aifnav/envsim/wanderer.hpp"
#include "aifnav/planner/episode.hpp"
#include "doctest.h"

using namespace aifnav;
using namespace aifnav::planner;
using ag::Var;
using ag::constant;

namespace {

wm::WmConfig tiny_wm(bool single = false) {
    wm::WmConfig c;
    c.d_h = 4;
    c.d_l = 8;
    c.sh_vars = 2;
    c.sh_classes = 2;
    c.sl_vars = 2;
    c.sl_classes = 2;
    c.embed = 8;
    c.enc_c1 = 2;
    c.enc_c2 = 2;
    c.enc_c3 = 4;
    c.head_hidden = 8;
    c.single_level = single;
    return c;
}

void zero_decoder(wm::Mtrssm& m) {
    auto z = [](Var p) {
        for (int64_t i = 0; i < p->value.size(); ++i) p->value[i] = 0.0f;
    };
    z(m.dec_fc.W);
    z(m.dec_fc.b);
    for (auto& c : m.dec_res) {
        z(c.W);
        z(c.b);
    }
    z(m.dec_up1.W);
    z(m.dec_up1.b);
    z(m.dec_out.W);
    z(m.dec_out.b);
}

policy::Policy tiny_policy(uint64_t seed) {
    policy::Policy p;
    p.cfg.T_F = 4;
    p.cfg.T_a = 2;
    p.cfg.K_train = 10;
    p.cfg.K_sample = 3;
    p.sched = policy::make_schedule(p.cfg.K_train);
    policy::DenoiserConfig dc;
    dc.horizon = p.cfg.horizon();
    dc.base_ch = 4;
    dc.cond_dim = 16;
    dc.step_emb_dim = 8;
    dc.n_keypoints = 8;
    p.net = std::make_shared<policy::DenoiserNet>(dc, seed);
    return p;
}

// A constant-velocity candidate [2, H] in action units.
Tensor straight_candidate(int H, float v, float omega) {
    Tensor c({2, H});
    for (int t = 0; t < H; ++t) {
        c[t] = v;
        c[H + t] = omega;
    }
    return c;
}

wm::Latent filtered_latent(const wm::Mtrssm& m, uint64_t seed) {
    ag::NoGradGuard ng;
    Rng rng(seed);
    Tensor obs({1, env::kObsC, env::kObsH, env::kObsW});
    rng.fill_uniform(obs, 0.0f, 1.0f);
    wm::Latent z = m.init_latent(1);
    return m.posterior_step(z, constant(Tensor::zeros({1, 2})),
                            m.encode_obs(constant(obs)), rng);
}

}  // namespace

TEST_SUITE_BEGIN("planner");

TEST_CASE("precision schedule: exact values, bounds, monotonicity") {
    PrecisionSchedule s;
    CHECK(s(10.0) == doctest::Approx(0.08 + 2.92 / 2).epsilon(1e-6));
    CHECK(std::abs(s(-100.0) - 0.08) < 1e-10);
    CHECK(s(0.0) == doctest::Approx(0.08 + 2.92 / (1.0 + std::exp(6.0))).epsilon(1e-6));
    CHECK(s(30.0) == doctest::Approx(0.08 + 2.92 / (1.0 + std::exp(-12.0))).epsilon(1e-6));

    double prev = s(-50.0);
    for (int n = -49; n <= 50; ++n) {
        double cur = s(double(n));
        CHECK(cur > prev);
        CHECK(cur > 0.08);
        CHECK(cur < 3.0);
        prev = cur;
    }
}

TEST_CASE("select_action: argmin with lowest-index ties") {
    auto mk = [](std::initializer_list<float> totals) {
        std::vector<EfeBreakdown> v;
        for (float t : totals) {
            EfeBreakdown b;
            b.total = t;
            v.push_back(b);
        }
        return v;
    };
    CHECK(select_action(mk({7.5f})) == 0);
    CHECK(select_action(mk({2.0f, -1.0f, 0.5f})) == 1);
    CHECK(select_action(mk({1.0f, 0.25f, 0.25f, 3.0f})) == 1);
    // Positive scaling never changes the argmin.
    auto a = mk({2.0f, -1.0f, 0.5f});
    auto b = mk({2.0f * 7, -1.0f * 7, 0.5f * 7});
    CHECK(select_action(a) == select_action(b));
    CHECK_THROWS(select_action({}));
}

TEST_CASE("feature encoder: shape, determinism, distance helpers") {
    FeatureEncoder f(3);
    Rng rng(5);
    Tensor obs({2, env::kObsC, env::kObsH, env::kObsW});
    rng.fill_uniform(obs, 0.0f, 1.0f);
    ag::NoGradGuard ng;
    Var a = f.forward(constant(obs));
    Var b = f.forward(constant(obs));
    REQUIRE(a->value.shape() == std::vector<int>{2, 64});
    for (int64_t i = 0; i < a->value.size(); ++i) CHECK(a->value[i] == b->value[i]);

    Tensor single({env::kObsC, env::kObsH, env::kObsW});
    rng.fill_uniform(single, 0.0f, 1.0f);
    Tensor fa = f.encode(single);
    CHECK(fa.size() == 64);
    CHECK(feature_distance2(fa, fa) == 0.0f);

    env::WorldSpec w = env::WorldSpec::default_world();
    CHECK(max_spatial_distance(w) ==
          doctest::Approx(std::hypot(8.0, 8.0) + 0.5 * 3.14159265358979).epsilon(1e-6));
}

TEST_CASE("train_features: loss decreases and anchors identical pairs at zero") {
    env::WorldSpec world = env::WorldSpec::default_world();
    env::Dataset data = env::wanderer_collect(world, 99, 2, 60, 0.2f);

    FeatureTrainConfig cfg;
    cfg.steps = 250;
    cfg.batch = 8;
    cfg.seed = 11;
    std::vector<float> losses;
    FeatureEncoder f = train_features(data, world, cfg,
                                      [&](int, float l) { losses.push_back(l); }, 50);
    REQUIRE(losses.size() >= 2);
    CHECK(losses.back() < losses.front());
    CHECK(std::isfinite(losses.back()));

    Tensor o = data.obs_at(0, 10);
    CHECK(feature_distance2(f.encode(o), f.encode(o)) < 0.1f * 0.1f);
}

TEST_CASE("efe_evaluate: degenerate pipeline with a constant decoder") {
    wm::Mtrssm m(tiny_wm(), 17);
    zero_decoder(m);  // decode() emits sigmoid(0) = 0.5 everywhere
    FeatureEncoder f(19);
    wm::Latent z = filtered_latent(m, 23);

    Tensor const_img = Tensor::full({env::kObsC, env::kObsH, env::kObsW}, 0.5f);
    Tensor f_const = f.encode(const_img);
    Rng grng(29);
    Tensor goal_obs({env::kObsC, env::kObsH, env::kObsW});
    grng.fill_uniform(goal_obs, 0.0f, 1.0f);
    Tensor f_goal = f.encode(goal_obs);

    PlannerConfig cfg;
    cfg.M = 1;
    cfg.N = 1;
    cfg.argmax_samples = true;
    Tensor cand = straight_candidate(5, 0.2f, 0.1f);
    Rng rng(31);
    EfeBreakdown b = efe_evaluate(m, f, cand, z, f_goal, cfg, 1.0f, rng);

    REQUIRE(b.epistemic_steps.size() == 4);
    const float want = feature_distance2(f_const, f_goal);
    for (size_t t = 0; t < b.extrinsic_steps.size(); ++t) {
        CHECK(b.extrinsic_steps[t] == doctest::Approx(want).epsilon(1e-4));
        CHECK(b.epistemic_steps[t] >= 0.0f);
    }

    SUBCASE("self-goal: extrinsic vanishes, total is minus the epistemic mean") {
        Rng rng2(31);
        EfeBreakdown s = efe_evaluate(m, f, cand, z, f_const, cfg, 1.0f, rng2);
        CHECK(s.extrinsic == doctest::Approx(0.0).epsilon(1e-6));
        CHECK(s.total == doctest::Approx(-s.epistemic).epsilon(1e-5));
    }

    SUBCASE("invalid inputs rejected") {
        Rng r(37);
        CHECK_THROWS(efe_evaluate(m, f, Tensor({2, 1}), z, f_goal, cfg, 1.0f, r));
        CHECK_THROWS(efe_evaluate(m, f, cand, m.init_latent(2), f_goal, cfg, 1.0f, r));
        PlannerConfig bad = cfg;
        bad.M = 0;
        CHECK_THROWS(efe_evaluate(m, f, cand, z, f_goal, bad, 1.0f, r));
    }
}

TEST_CASE("efe_evaluate: selection laws and Monte-Carlo consistency") {
    wm::Mtrssm m(tiny_wm(), 41);
    FeatureEncoder f(43);
    wm::Latent z = filtered_latent(m, 47);
    Rng grng(53);
    Tensor goal_obs({env::kObsC, env::kObsH, env::kObsW});
    grng.fill_uniform(goal_obs, 0.0f, 1.0f);
    Tensor f_goal = f.encode(goal_obs);

    std::vector<Tensor> cands;
    Rng crng(59);
    for (int c = 0; c < 4; ++c)
        cands.push_back(straight_candidate(4, crng.uniform(-0.3f, 0.3f),
                                           crng.uniform(-1.0f, 1.0f)));

    PlannerConfig cfg;
    cfg.M = 2;
    cfg.N = 2;

    SUBCASE("zero precision selects the argmax of the epistemic term") {
        std::vector<EfeBreakdown> bs;
        for (int c = 0; c < 4; ++c) {
            Rng r(100 + c);
            bs.push_back(efe_evaluate(m, f, cands[c], z, f_goal, cfg, 0.0f, r));
        }
        int chosen = select_action(bs);
        int best_epi = 0;
        for (int c = 1; c < 4; ++c)
            if (bs[c].epistemic > bs[best_epi].epistemic) best_epi = c;
        CHECK(chosen == best_epi);
    }

    SUBCASE("only_extrinsic mode selects the argmin of feature distance") {
        PlannerConfig oe = cfg;
        oe.mode = Mode::kOnlyExtrinsic;
        std::vector<EfeBreakdown> bs;
        for (int c = 0; c < 4; ++c) {
            Rng r(100 + c);
            bs.push_back(efe_evaluate(m, f, cands[c], z, f_goal, oe, 1.7f, r));
        }
        int chosen = select_action(bs);
        int best_ext = 0;
        for (int c = 1; c < 4; ++c)
            if (bs[c].extrinsic < bs[best_ext].extrinsic) best_ext = c;
        CHECK(chosen == best_ext);
    }

    SUBCASE("estimator noise shrinks like 1/sqrt(MN)") {
        // Thread draws must matter for the scaling to be visible: with an
        // untrained model the decoder barely responds to s_l, so boost the
        // latent-to-image and embedding-to-posterior paths, and use the
        // single-level variant whose MN threads are fully independent (the
        // two-level planner shares its high-level draw across each group of
        // N threads by design, which caps that channel's scaling at 1/sqrt(M)).
        wm::Mtrssm ms(tiny_wm(true), 41);
        for (int64_t i = 0; i < ms.dec_fc.W->value.size(); ++i) ms.dec_fc.W->value[i] *= 10.0f;
        for (int64_t i = 0; i < ms.post_l_fc2.W->value.size(); ++i)
            ms.post_l_fc2.W->value[i] *= 10.0f;
        wm::Latent zs = filtered_latent(ms, 47);

        Tensor cand = straight_candidate(2, 0.2f, 0.3f);
        auto std_of = [&](int mn, uint64_t salt) {
            PlannerConfig c;
            c.M = mn;
            c.N = mn;
            const int reps = 60;
            std::vector<double> totals;
            for (int r = 0; r < reps; ++r) {
                Rng rr(salt + r);
                totals.push_back(efe_evaluate(ms, f, cand, zs, f_goal, c, 1.0f, rr).total);
            }
            double mean = std::accumulate(totals.begin(), totals.end(), 0.0) / reps;
            double var = 0;
            for (double t : totals) var += (t - mean) * (t - mean);
            return std::sqrt(var / (reps - 1));
        };
        double s_small = std_of(2, 1000);   // MN = 4
        double s_large = std_of(8, 2000);   // MN = 64
        double ratio = s_small / s_large;   // expect ~sqrt(64/4) = 4
        INFO("std ratio " << ratio);
        CHECK(ratio > 2.0);
        CHECK(ratio < 8.0);
    }
}

TEST_CASE("run_episode: degenerate cases, reproducibility, serialization") {
    env::WorldSpec world = env::WorldSpec::default_world();
    wm::Mtrssm m(tiny_wm(), 61);
    FeatureEncoder f(67);
    policy::Policy pol = tiny_policy(71);
    PlannerConfig cfg;
    cfg.M = 1;
    cfg.N = 1;
    cfg.n_candidates = 2;
    PrecisionSchedule sched;
    EpisodeLimits lim;
    lim.max_steps = 4;

    env::Pose start{2.0f, 2.0f, 0.0f};
    env::Pose goal{6.0f, 6.0f, 0.0f};

    SUBCASE("start inside the goal region succeeds immediately") {
        EpisodeLog log = run_episode(world, goal, goal, pol, m, f, cfg, sched, lim, 5);
        CHECK(log.success);
        CHECK(log.steps == 0);
        CHECK(log.iterations.empty());
    }

    SUBCASE("zero step budget fails without collisions") {
        EpisodeLimits l0 = lim;
        l0.max_steps = 0;
        EpisodeLog log = run_episode(world, start, goal, pol, m, f, cfg, sched, l0, 5);
        CHECK_FALSE(log.success);
        CHECK(log.steps == 0);
        CHECK(log.collisions == 0);
    }

    SUBCASE("invalid goal specs rejected") {
        EpisodeLimits bad = lim;
        bad.goal_radius = 0.0f;
        CHECK_THROWS(run_episode(world, start, goal, pol, m, f, cfg, sched, bad, 5));
        env::Pose outside{-1.0f, 4.0f, 0.0f};
        CHECK_THROWS(run_episode(world, start, outside, pol, m, f, cfg, sched, lim, 5));
        CHECK_THROWS([&] {
            PlannerConfig rc = cfg;
            rc.mode = Mode::kRssm;  // needs a single-level model
            return run_episode(world, start, goal, pol, m, f, rc, sched, lim, 5);
        }());
    }

    SUBCASE("identical seeds reproduce the episode bit for bit") {
        EpisodeLog a = run_episode(world, start, goal, pol, m, f, cfg, sched, lim, 13);
        EpisodeLog b = run_episode(world, start, goal, pol, m, f, cfg, sched, lim, 13);
        REQUIRE(a.step_records.size() == b.step_records.size());
        REQUIRE(a.iterations.size() == b.iterations.size());
        for (size_t i = 0; i < a.step_records.size(); ++i) {
            CHECK(a.step_records[i].pose.x == b.step_records[i].pose.x);
            CHECK(a.step_records[i].pose.y == b.step_records[i].pose.y);
            CHECK(a.step_records[i].pose.heading == b.step_records[i].pose.heading);
            CHECK(a.step_records[i].action.v == b.step_records[i].action.v);
        }
        for (size_t i = 0; i < a.iterations.size(); ++i) {
            CHECK(a.iterations[i].chosen == b.iterations[i].chosen);
            for (size_t c = 0; c < a.iterations[i].candidates.size(); ++c)
                CHECK(a.iterations[i].candidates[c].total ==
                      b.iterations[i].candidates[c].total);
        }
    }

    SUBCASE("rssm mode runs with a single-level model") {
        wm::Mtrssm ms(tiny_wm(true), 73);
        PlannerConfig rc = cfg;
        rc.mode = Mode::kRssm;
        EpisodeLog log = run_episode(world, start, goal, pol, ms, f, rc, sched, lim, 7);
        CHECK(log.steps == lim.max_steps);
        CHECK(log.mode == "rssm");
    }

    SUBCASE("jsonl round trip preserves the log") {
        namespace fs = std::filesystem;
        EpisodeLog log = run_episode(world, start, goal, pol, m, f, cfg, sched, lim, 13);
        fs::path p = fs::temp_directory_path() / "aifnav_episode_test.jsonl";
        log.save_jsonl(p.string());
        EpisodeLog r = EpisodeLog::load_jsonl(p.string());
        fs::remove(p);
        CHECK(r.seed == log.seed);
        CHECK(r.mode == log.mode);
        CHECK(r.success == log.success);
        CHECK(r.steps == log.steps);
        CHECK(r.collisions == log.collisions);
        REQUIRE(r.iterations.size() == log.iterations.size());
        REQUIRE(r.step_records.size() == log.step_records.size());
        for (size_t i = 0; i < r.iterations.size(); ++i) {
            CHECK(r.iterations[i].n == log.iterations[i].n);
            CHECK(r.iterations[i].chosen == log.iterations[i].chosen);
            for (size_t c = 0; c < r.iterations[i].candidates.size(); ++c)
                CHECK(r.iterations[i].candidates[c].total ==
                      doctest::Approx(log.iterations[i].candidates[c].total));
        }
        for (size_t i = 0; i < r.step_records.size(); ++i) {
            CHECK(r.step_records[i].pose.x == doctest::Approx(log.step_records[i].pose.x));
            CHECK(r.step_records[i].collided == log.step_records[i].collided);
        }
    }
}

TEST_SUITE_END();
