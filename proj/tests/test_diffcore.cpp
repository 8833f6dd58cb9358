#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "aifnav/diffcore/adam.hpp"
#include "aifnav/diffcore/checkpoint.hpp"
#include "aifnav/diffcore/nn.hpp"
#include "aifnav/diffcore/ops.hpp"
#include "gradcheck.hpp"

using namespace aifnav;
using namespace aifnav::ag;
using aifnav::testutil::gradcheck;

namespace {

Var randin(Rng& rng, std::vector<int> shape, float stddev = 0.5f) {
    return parameter(rng.normal_tensor(std::move(shape), stddev));
}

void check_op(const char* name, const std::function<Var(const std::vector<Var>&)>& f,
              const std::function<std::vector<Var>(Rng&)>& make_inputs, int draws = 100,
              double rel_tol = 1e-4) {
    Rng rng(fnv1a(name));
    int failed = 0;
    double worst = 0.0;
    for (int d = 0; d < draws; ++d) {
        auto res = gradcheck(f, make_inputs(rng), 1e-3f, rel_tol);
        failed += res.failed;
        worst = std::max(worst, res.worst_rel);
    }
    INFO(std::string(name) << ": worst rel err " << worst);
    CHECK(failed == 0);
}

}  // namespace

TEST_SUITE_BEGIN("diffcore");

TEST_CASE("matmul shape rule and mismatch reporting") {
    Rng rng(1);
    Var a = randin(rng, {2, 3});
    Var b = randin(rng, {3, 4});
    CHECK(matmul(a, b)->value.shape() == std::vector<int>{2, 4});
    Var bad = randin(rng, {5, 4});
    CHECK_THROWS_WITH_AS(matmul(a, bad), doctest::Contains("[2,3]"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(matmul(a, bad), doctest::Contains("[5,4]"), std::invalid_argument);
}

TEST_CASE("softmax normalizes") {
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
        Var v = randin(rng, {1, 7}, 2.0f);
        Tensor y = softmax(v)->value;
        float s = 0.0f;
        for (int c = 0; c < 7; ++c) s += y[c];
        CHECK(std::abs(s - 1.0f) < 1e-6f);
    }
}

TEST_CASE("conv2d output shape follows floor((n+2p-k)/s)+1") {
    Rng rng(3);
    Var x = randin(rng, {1, 3, 24, 32});
    Var w = randin(rng, {16, 3, 3, 3});
    Var b = parameter(Tensor::zeros({16}));
    Var y = conv2d(x, w, b, 2, 1);
    CHECK(y->value.shape() == std::vector<int>{1, 16, 12, 16});
}

TEST_CASE("backward: simple analytic cases") {
    // loss = x*x at x=3 -> grad 6
    Var x = parameter(Tensor::scalar(3.0f));
    Var loss = sum_all(mul(x, x));
    backward(loss);
    CHECK(x->grad[0] == doctest::Approx(6.0f));

    // loss = sum(softmax(v)) is constant -> grad ~ 0
    Rng rng(4);
    Var v = randin(rng, {1, 9}, 1.0f);
    backward(sum_all(softmax(v)));
    for (int i = 0; i < 9; ++i) CHECK(std::abs(v->grad[i]) < 1e-6f);

    // non-scalar loss rejected
    Var m = randin(rng, {2, 2});
    CHECK_THROWS_AS(backward(m), std::invalid_argument);
}

TEST_CASE("zero-path property: off-path parameters get exactly zero grad") {
    Rng rng(5);
    Var used = randin(rng, {3});
    Var unused = randin(rng, {4});
    backward(sum_all(mul(used, used)));
    for (int i = 0; i < 4; ++i) CHECK(unused->grad[i] == 0.0f);
}

TEST_CASE("determinism: same seed gives bit-identical forward and grads") {
    auto run = [](uint64_t seed) {
        Rng rng(seed);
        ParamSet ps;
        Linear l1(ps, "l1", 6, 5, rng), l2(ps, "l2", 5, 1, rng);
        Var x = constant(rng.normal_tensor({4, 6}));
        Var loss = mean_all(mul(l2(tanh_op(l1(x))), l2(tanh_op(l1(x)))));
        backward(loss);
        std::vector<float> out{loss->value[0]};
        for (const auto& p : ps.all())
            for (int64_t i = 0; i < p->grad.size(); ++i) out.push_back(p->grad[i]);
        return out;
    };
    CHECK(run(77) == run(77));
}

TEST_CASE("gradcheck: elementwise and activation ops") {
    check_op("add", [](const std::vector<Var>& in) {
        return add(in[0], in[1]);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {2, 3}), randin(r, {2, 3})}; });

    check_op("sub_mul", [](const std::vector<Var>& in) {
        return mul(sub(in[0], in[1]), in[1]);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {2, 3}), randin(r, {2, 3})}; });

    check_op("scale_addscalar", [](const std::vector<Var>& in) {
        return add_scalar(scale(in[0], 1.3f), 0.2f);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {5})}; });

    check_op("tanh", [](const std::vector<Var>& in) {
        return tanh_op(in[0]);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {7}, 1.0f)}; });

    check_op("sigmoid", [](const std::vector<Var>& in) {
        return sigmoid(in[0]);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {7}, 1.0f)}; });

    check_op("silu", [](const std::vector<Var>& in) {
        return silu(in[0]);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {7}, 1.0f)}; });

    check_op("relu", [](const std::vector<Var>& in) {
        return relu(in[0]);
    }, [](Rng& r) {
        // keep inputs away from the kink where FD is undefined
        Tensor t({7});
        for (int i = 0; i < 7; ++i) {
            float v = r.normal();
            if (std::abs(v) < 0.05f) v = v < 0 ? v - 0.05f : v + 0.05f;
            t[i] = v;
        }
        return std::vector<Var>{parameter(t)};
    });

    check_op("exp", [](const std::vector<Var>& in) {
        return exp_op(in[0]);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {6}, 0.5f)}; });

    check_op("log_eps", [](const std::vector<Var>& in) {
        return log_eps(in[0]);
    }, [](Rng& r) {
        Tensor t({6});
        r.fill_uniform(t, 0.2f, 2.0f);
        return std::vector<Var>{parameter(t)};
    });

    check_op("sqrt_eps", [](const std::vector<Var>& in) {
        return sqrt_eps(in[0]);
    }, [](Rng& r) {
        Tensor t({6});
        r.fill_uniform(t, 0.2f, 2.0f);
        return std::vector<Var>{parameter(t)};
    });

    check_op("clamp_min", [](const std::vector<Var>& in) {
        return clamp_min(in[0], 0.0f);
    }, [](Rng& r) {
        Tensor t({8});
        for (int i = 0; i < 8; ++i) {
            float v = r.normal();
            if (std::abs(v) < 0.05f) v += 0.1f;
            t[i] = v;
        }
        return std::vector<Var>{parameter(t)};
    });
}

TEST_CASE("gradcheck: linear algebra and structure ops") {
    check_op("matmul", [](const std::vector<Var>& in) {
        return matmul(in[0], in[1]);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {2, 3}), randin(r, {3, 4})}; });

    check_op("bias_add", [](const std::vector<Var>& in) {
        return bias_add(in[0], in[1]);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {2, 3, 4}), randin(r, {3})}; });

    check_op("softmax", [](const std::vector<Var>& in) {
        return softmax(in[0]);
    }, [](Rng& r) {
        Tensor w({2, 5});
        r.fill_uniform(w, -1.0f, 1.0f);
        return std::vector<Var>{parameter(w)};
    });

    check_op("sum_lastdim", [](const std::vector<Var>& in) {
        return sum_lastdim(in[0]);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {3, 2, 4})}; });

    check_op("concat_slice", [](const std::vector<Var>& in) {
        Var c = concat({in[0], in[1]}, 1);
        return slice(c, 1, 1, 4);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {2, 2, 3}), randin(r, {2, 3, 3})}; });

    check_op("reshape_mean", [](const std::vector<Var>& in) {
        return scale(mul(reshape(in[0], {6}), reshape(in[0], {6})), 1.0f / 6.0f);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {2, 3})}; });
}

TEST_CASE("gradcheck: convolutions, upsampling, normalization") {
    check_op("conv2d", [](const std::vector<Var>& in) {
        return conv2d(in[0], in[1], in[2], 2, 1);
    }, [](Rng& r) {
        return std::vector<Var>{randin(r, {1, 2, 5, 6}), randin(r, {3, 2, 3, 3}), randin(r, {3})};
    }, 50, 1e-3);

    check_op("conv1d", [](const std::vector<Var>& in) {
        return conv1d(in[0], in[1], in[2], 1, 1);
    }, [](Rng& r) {
        return std::vector<Var>{randin(r, {2, 2, 6}), randin(r, {3, 2, 3}), randin(r, {3})};
    }, 50, 1e-3);

    check_op("upsample_nearest1d", [](const std::vector<Var>& in) {
        return upsample_nearest1d(in[0], 2);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {1, 2, 4})}; });

    check_op("pixel_shuffle", [](const std::vector<Var>& in) {
        return pixel_shuffle(in[0], 2);
    }, [](Rng& r) { return std::vector<Var>{randin(r, {1, 8, 2, 3})}; });

    check_op("channel_norm", [](const std::vector<Var>& in) {
        return channel_norm(in[0], in[1], in[2]);
    }, [](Rng& r) {
        return std::vector<Var>{randin(r, {2, 4, 3}, 1.0f), randin(r, {4}, 0.3f), randin(r, {4}, 0.3f)};
    }, 50, 1e-3);

    check_op("layer_norm", [](const std::vector<Var>& in) {
        return layer_norm(in[0], in[1], in[2]);
    }, [](Rng& r) {
        return std::vector<Var>{randin(r, {3, 5}, 1.0f), randin(r, {5}, 0.3f), randin(r, {5}, 0.3f)};
    }, 50, 1e-3);
}

TEST_CASE("gradcheck: random 3-layer net vs finite differences") {
    check_op("three_layer_net", [](const std::vector<Var>& in) {
        Var h1 = tanh_op(bias_add(matmul(in[0], in[1]), in[2]));
        Var h2 = silu(bias_add(matmul(h1, in[3]), in[4]));
        Var y = bias_add(matmul(h2, in[5]), in[6]);
        return mul(y, y);
    }, [](Rng& r) {
        return std::vector<Var>{randin(r, {3, 4}), randin(r, {4, 5}), randin(r, {5}),
                                randin(r, {5, 4}), randin(r, {4}), randin(r, {4, 2}), randin(r, {2})};
    }, 30, 2e-3);
}

TEST_CASE("straight-through sampling: forward draw, identity backward") {
    // deterministic distribution -> one-hot at its argmax, always
    Rng rng(6);
    Var p = parameter(Tensor({2, 4}, {0, 0, 1, 0, 1, 0, 0, 0}));
    for (int i = 0; i < 10; ++i) {
        Tensor s = onehot_st_sample(p, rng)->value;
        CHECK(s[2] == 1.0f);
        CHECK(s[4] == 1.0f);
    }

    // empirical frequencies over 10,000 draws within +-0.02
    Var q = parameter(Tensor({1, 4}, {0.7f, 0.2f, 0.1f, 0.0f}));
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 10000; ++i) {
        Tensor s = onehot_st_sample(q, rng)->value;
        for (int c = 0; c < 4; ++c)
            if (s[c] == 1.0f) ++counts[c];
    }
    CHECK(std::abs(counts[0] / 10000.0 - 0.7) < 0.02);
    CHECK(std::abs(counts[1] / 10000.0 - 0.2) < 0.02);
    CHECK(std::abs(counts[2] / 10000.0 - 0.1) < 0.02);
    CHECK(counts[3] == 0);

    // gradient of sum(sample) w.r.t. probabilities is all-ones
    Var s = onehot_st_sample(q, rng);
    backward(sum_all(s));
    for (int c = 0; c < 4; ++c) CHECK(q->grad[c] == 1.0f);
}

TEST_CASE("adam: descent behavior and 1-D recursion oracle") {
    // zero gradients -> parameters unchanged
    {
        Var w = parameter(Tensor::scalar(1.5f));
        Adam opt({w});
        opt.zero_grad();
        opt.step();
        CHECK(w->value[0] == 1.5f);
    }
    // constant gradient g -> parameter moves opposite the sign of g
    {
        Var w = parameter(Tensor::scalar(0.0f));
        Adam opt({w});
        for (int i = 0; i < 50; ++i) {
            opt.zero_grad();
            w->grad[0] = 2.5f;
            opt.step();
        }
        CHECK(w->value[0] < 0.0f);
    }
    // quadratic loss, 500 steps, lr 1e-2: matches an independent scalar
    // recursion and lands within 1e-3 of the optimum
    {
        const float target = 0.8f;
        AdamConfig cfg;
        cfg.lr = 1e-2f;
        cfg.clip_norm = 0.0f;
        Var w = parameter(Tensor::scalar(0.3f));
        Adam opt({w}, cfg);

        float ow = 0.3f, om = 0.0f, ov = 0.0f;  // oracle state
        for (int t = 1; t <= 500; ++t) {
            opt.zero_grad();
            Var loss = sum_all(mul(sub(w, constant(Tensor::scalar(target))),
                                   sub(w, constant(Tensor::scalar(target)))));
            backward(loss);
            opt.step();

            float g = 2.0f * (ow - target);
            om = 0.9f * om + 0.1f * g;
            ov = 0.999f * ov + 0.001f * g * g;
            float mh = om / (1.0f - std::pow(0.9f, (float)t));
            float vh = ov / (1.0f - std::pow(0.999f, (float)t));
            ow -= 0.01f * mh / (std::sqrt(vh) + 1e-8f);

            CHECK(std::abs(w->value[0] - ow) < 1e-4f);
        }
        CHECK(std::abs(w->value[0] - target) < 1e-3f);
    }
    // non-finite gradient -> step rejected, parameter untouched
    {
        Var w = parameter(Tensor::scalar(1.0f));
        Adam opt({w});
        w->grad[0] = std::numeric_limits<float>::quiet_NaN();
        CHECK(!opt.step());
        CHECK(w->value[0] == 1.0f);
        CHECK(opt.skipped() == 1);
    }
}

TEST_CASE("checkpoint: manifest + blob round trip") {
    namespace fs = std::filesystem;
    Rng rng(7);
    ParamSet ps;
    Var a = ps.add("enc.W", rng.normal_tensor({3, 4}));
    Var b = ps.add("enc.b", rng.normal_tensor({4}));
    auto dir = fs::temp_directory_path() / "aifnav_ckpt_test";
    save_checkpoint(dir.string(), ps.all(), {{"note", 42}});

    nlohmann::json meta;
    auto loaded = load_checkpoint(dir.string(), &meta);
    CHECK(meta["note"] == 42);
    CHECK(loaded.at("enc.W").shape() == std::vector<int>{3, 4});
    for (int64_t i = 0; i < a->value.size(); ++i) CHECK(loaded.at("enc.W")[i] == a->value[i]);

    ParamSet ps2;
    Var a2 = ps2.add("enc.W", Tensor::zeros({3, 4}));
    Var b2 = ps2.add("enc.b", Tensor::zeros({4}));
    load_into(dir.string(), ps2.all());
    for (int64_t i = 0; i < b->value.size(); ++i) CHECK(b2->value[i] == b->value[i]);
    fs::remove_all(dir);
}

TEST_SUITE_END();
