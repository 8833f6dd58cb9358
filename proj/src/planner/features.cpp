#include "aifnav/planner/features.hpp"

#include <cmath>
#include <stdexcept>

#include "aifnav/diffcore/adam.hpp"
#include "aifnav/diffcore/checkpoint.hpp"

namespace aifnav::planner {

using namespace ag;

FeatureEncoder::FeatureEncoder(uint64_t seed) {
    Rng rng(seed);
    c1 = Conv2d(params, "feat.c1", 3, 16, 3, 2, 1, rng);   // 24x32 -> 12x16
    c2 = Conv2d(params, "feat.c2", 16, 32, 3, 2, 1, rng);  // -> 6x8
    c3 = Conv2d(params, "feat.c3", 32, 64, 3, 2, 1, rng);  // -> 3x4
    fc1 = Linear(params, "feat.fc1", 64 * 3 * 4, 128, rng);
    fc2 = Linear(params, "feat.fc2", 128, 128, rng);
    fc3 = Linear(params, "feat.fc3", 128, kFeatDim, rng);
}

Var FeatureEncoder::forward(const Var& obs) const {
    Var h = silu(c1(obs));
    h = silu(c2(h));
    h = silu(c3(h));
    int B = h->value.shape()[0];
    h = silu(fc1(reshape(h, {B, 64 * 3 * 4})));
    h = silu(fc2(h));
    return fc3(h);
}

Tensor FeatureEncoder::encode(const Tensor& obs) const {
    NoGradGuard ng;
    if (obs.rank() == 3) {
        Tensor o({1, obs.dim(0), obs.dim(1), obs.dim(2)});
        std::copy(obs.data(), obs.data() + obs.size(), o.data());
        return forward(constant(o))->value;
    }
    return forward(constant(obs))->value;
}

void FeatureEncoder::save(const std::string& dir) const {
    nlohmann::json meta{{"kind", "features"}, {"feat_dim", kFeatDim}};
    save_checkpoint(dir, params.all(), meta);
}

FeatureEncoder FeatureEncoder::load(const std::string& dir) {
    nlohmann::json meta;
    load_checkpoint(dir, &meta);
    if (meta.value("kind", "") != "features")
        throw std::runtime_error("feature checkpoint kind mismatch in " + dir);
    FeatureEncoder f(0);
    load_into(dir, f.params.all());
    return f;
}

float max_spatial_distance(const env::WorldSpec& world, float lambda_h) {
    return std::hypot(world.width, world.height) + lambda_h * 3.14159265358979323846f;
}

float feature_distance2(const Tensor& fa, const Tensor& fb) {
    double s = 0;
    for (int64_t i = 0; i < fa.size(); ++i) {
        double d = double(fa[i]) - fb[i];
        s += d * d;
    }
    return float(s);
}

FeatureEncoder train_features(const env::Dataset& data, const env::WorldSpec& world,
                              const FeatureTrainConfig& cfg,
                              const std::function<void(int, float)>& progress,
                              int report_every) {
    if (data.n_sequences < 1 || data.seq_len < 2)
        throw std::invalid_argument("train_features: empty dataset");

    FeatureEncoder f(splitmix64(cfg.seed ^ fnv1a("feat_init")));
    Rng rng(splitmix64(cfg.seed ^ fnv1a("feat_train")));
    Adam opt(f.params.all(), AdamConfig{cfg.lr});
    const float d_max = max_spatial_distance(world);
    const int64_t per_img = int64_t(env::kObsC) * env::kObsH * env::kObsW;

    auto rand_index = [&](int& s, int& t) {
        s = rng.randint(data.n_sequences);
        t = rng.randint(data.seq_len);
    };

    for (int step = 1; step <= cfg.steps; ++step) {
        const int B = cfg.batch;
        Tensor oa({B, env::kObsC, env::kObsH, env::kObsW});
        Tensor ob({B, env::kObsC, env::kObsH, env::kObsW});
        Tensor target({B});
        for (int i = 0; i < B; ++i) {
            int sa, ta, sb, tb;
            rand_index(sa, ta);
            env::Pose pa = data.pose_at(sa, ta), pb{};
            if (i < B / 2) {
                // Near pair: rejection-sample until within the radius.
                for (int tries = 0;; ++tries) {
                    rand_index(sb, tb);
                    pb = data.pose_at(sb, tb);
                    float dx = pa.x - pb.x, dy = pa.y - pb.y;
                    if (std::sqrt(dx * dx + dy * dy) <= cfg.near_radius || tries > 200) break;
                }
            } else {
                rand_index(sb, tb);
                pb = data.pose_at(sb, tb);
            }
            std::copy(data.obs[sa].begin() + ta * per_img,
                      data.obs[sa].begin() + (ta + 1) * per_img, oa.data() + i * per_img);
            std::copy(data.obs[sb].begin() + tb * per_img,
                      data.obs[sb].begin() + (tb + 1) * per_img, ob.data() + i * per_img);
            target[i] = env::spatial_distance(pa, pb) / d_max;
        }

        Var fa = f.forward(constant(oa));
        Var fb = f.forward(constant(ob));
        Var diff = sub(fa, fb);
        Var dist = sqrt_eps(sum_lastdim(mul(diff, diff)));  // [B]
        Var loss = mse(dist, constant(target));

        f.params.zero_grad();
        backward(loss);
        opt.step();
        if (progress && (step % report_every == 0 || step == 1))
            progress(step, loss->value[0]);
    }
    return f;
}

}  // namespace aifnav::planner
