#include "aifnav/policy/denoiser.hpp"

#include <cmath>

namespace aifnav::policy {

using namespace ag;

Var spatial_softmax(const Var& x, int H, int W) {
    const auto& sh = x->value.shape();
    int B = sh[0], C = sh[1];
    Var flat = reshape(x, {B * C, H * W});
    Var attn = softmax(flat);  // [B*C, H*W]

    Tensor coords({H * W, 2});
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            coords[(r * W + c) * 2 + 0] = W > 1 ? 2.0f * c / (W - 1) - 1.0f : 0.0f;
            coords[(r * W + c) * 2 + 1] = H > 1 ? 2.0f * r / (H - 1) - 1.0f : 0.0f;
        }
    Var kp = matmul(attn, constant(coords));  // [B*C, 2]
    return reshape(kp, {B, 2 * C});           // per-channel (x, y) pairs
}

Var step_embedding(const std::vector<int>& k, int K, int dim) {
    int B = static_cast<int>(k.size());
    int half = dim / 2;
    Tensor e({B, dim});
    for (int i = 0; i < B; ++i) {
        float pos = static_cast<float>(k[i]) / static_cast<float>(K) * 100.0f;
        for (int j = 0; j < half; ++j) {
            float freq = std::exp(-std::log(10000.0f) * j / half);
            e[i * dim + j] = std::sin(pos * freq);
            e[i * dim + half + j] = std::cos(pos * freq);
        }
    }
    return constant(e);
}

CondBlock::CondBlock(ParamSet& ps, const std::string& name, int cin, int cout, int stride,
                     int cond_dim, Rng& rng)
    : conv(ps, name + ".conv", cin, cout, 3, stride, 1, rng),
      norm(ps, name + ".norm", cout),
      cond_proj(ps, name + ".cond", cond_dim, cout, rng),
      out_ch(cout) {}

Var CondBlock::operator()(const Var& x, const Var& cond) const {
    Var h = norm(conv(x));
    int B = h->value.shape()[0], T = h->value.shape()[2];
    Var bias = reshape(cond_proj(cond), {B, out_ch, 1});
    h = add(h, upsample_nearest1d(bias, T));
    return silu(h);
}

DenoiserNet::DenoiserNet(const DenoiserConfig& c, uint64_t seed) : cfg(c) {
    Rng rng(seed);
    const int b = cfg.base_ch, cd = cfg.cond_dim, kp = 2 * cfg.n_keypoints;

    oc1 = Conv2d(params, "obs.c1", 6, 8, 3, 2, 1, rng);
    oc2 = Conv2d(params, "obs.c2", 8, 16, 3, 2, 1, rng);
    oc3 = Conv2d(params, "obs.c3", 16, cfg.n_keypoints, 3, 1, 1, rng);
    obs_proj = Linear(params, "obs.proj", kp, 64, rng);

    cond_fc1 = Linear(params, "cond.fc1", 64 + cfg.step_emb_dim, cd, rng);
    cond_fc2 = Linear(params, "cond.fc2", cd, cd, rng);

    in_block = CondBlock(params, "unet.in", cfg.act_dim, b, 1, cd, rng);
    down1a = CondBlock(params, "unet.d1a", b, 2 * b, 2, cd, rng);
    down1b = CondBlock(params, "unet.d1b", 2 * b, 2 * b, 1, cd, rng);
    down2a = CondBlock(params, "unet.d2a", 2 * b, 4 * b, 2, cd, rng);
    down2b = CondBlock(params, "unet.d2b", 4 * b, 4 * b, 1, cd, rng);
    up1a = CondBlock(params, "unet.u1a", 4 * b + 2 * b, 2 * b, 1, cd, rng);
    up1b = CondBlock(params, "unet.u1b", 2 * b, 2 * b, 1, cd, rng);
    up2a = CondBlock(params, "unet.u2a", 2 * b + b, b, 1, cd, rng);
    up2b = CondBlock(params, "unet.u2b", b, b, 1, cd, rng);
    out_conv = Conv1d(params, "unet.out", b, cfg.act_dim, 3, 1, 1, rng);
}

Var DenoiserNet::encode_obs(const Var& obs_pair) const {
    Var h = relu(oc1(obs_pair));   // [B, 8, 12, 16]
    h = relu(oc2(h));              // [B, 16, 6, 8]
    h = oc3(h);                    // [B, n_kp, 6, 8]
    Var kp = spatial_softmax(h, 6, 8);
    return obs_proj(kp);           // [B, 64]
}

Var DenoiserNet::condition(const Var& obs_feat, const std::vector<int>& k, int K) const {
    Var emb = step_embedding(k, K, cfg.step_emb_dim);
    Var cat = concat({obs_feat, emb}, 1);
    return cond_fc2(silu(cond_fc1(cat)));
}

Var DenoiserNet::forward(const Var& a_k, const Var& cond) const {
    auto fit = [](const Var& x, int T) {  // trim nearest-neighbor upsample overshoot
        return x->value.shape()[2] == T ? x : slice(x, 2, 0, T);
    };
    Var x = in_block(a_k, cond);
    Var s1 = x;
    int t1 = x->value.shape()[2];
    x = down1b(down1a(x, cond), cond);
    Var s2 = x;
    int t2 = x->value.shape()[2];
    x = down2b(down2a(x, cond), cond);

    x = fit(upsample_nearest1d(x, 2), t2);
    x = up1b(up1a(concat({x, s2}, 1), cond), cond);
    x = fit(upsample_nearest1d(x, 2), t1);
    x = up2b(up2a(concat({x, s1}, 1), cond), cond);
    return out_conv(x);
}

}  // namespace aifnav::policy
