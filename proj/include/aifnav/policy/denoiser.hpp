#pragma once

#include <string>
#include <vector>

#include "aifnav/diffcore/nn.hpp"

namespace aifnav::policy {

struct DenoiserConfig {
    int horizon = 18;     // denoised sequence length (T_F + 2)
    int act_dim = 2;
    int base_ch = 32;     // U-Net base width; levels are base, 2*base, 4*base
    int cond_dim = 128;   // observation features + step embedding, fused
    int step_emb_dim = 64;
    int n_keypoints = 32;
};

// Conv block: conv1d k3 -> channel norm -> per-sample conditioning bias -> silu.
struct CondBlock {
    ag::Conv1d conv;
    ag::ChannelNorm norm;
    ag::Linear cond_proj;
    int out_ch = 0;

    CondBlock() = default;
    CondBlock(ag::ParamSet& ps, const std::string& name, int cin, int cout, int stride,
              int cond_dim, Rng& rng);

    // x: [B, cin, T], cond: [B, cond_dim]
    ag::Var operator()(const ag::Var& x, const ag::Var& cond) const;
};

// Noise-prediction network: spatial-softmax observation encoder producing
// keypoint coordinates, a sinusoidal diffusion-step embedding, and a 1-D
// U-Net over the action sequence with per-sample conditioning at every block.
struct DenoiserNet {
    DenoiserConfig cfg;
    ag::ParamSet params;

    // observation encoder (input: both context frames stacked on channels)
    ag::Conv2d oc1, oc2, oc3;
    ag::Linear obs_proj;

    // conditioning fusion
    ag::Linear cond_fc1, cond_fc2;

    // U-Net
    CondBlock in_block;          // act_dim -> base       @ T
    CondBlock down1a, down1b;    // base -> 2b (s2), 2b   @ T/2
    CondBlock down2a, down2b;    // 2b -> 4b (s2), 4b     @ T/4
    CondBlock up1a, up1b;        // 4b+2b -> 2b, 2b       @ T/2
    CondBlock up2a, up2b;        // 2b+b -> b, b          @ T
    ag::Conv1d out_conv;         // b -> act_dim          @ T

    explicit DenoiserNet(const DenoiserConfig& cfg, uint64_t seed);

    // obs_pair: [B, 6, 24, 32] -> keypoint features [B, 2*n_keypoints]
    ag::Var encode_obs(const ag::Var& obs_pair) const;

    // Fused conditioning vector for diffusion steps k (one per batch item).
    // obs_feat: [B, 2*n_keypoints] -> [B, cond_dim]
    ag::Var condition(const ag::Var& obs_feat, const std::vector<int>& k, int K) const;

    // a_k: [B, act_dim, T], cond: [B, cond_dim] -> predicted noise, same shape.
    ag::Var forward(const ag::Var& a_k, const ag::Var& cond) const;
};

// Expected pixel coordinates under a per-channel softmax over space.
// x: [B, C, H, W] -> [B, 2*C] (x then y coordinate per channel, in [-1, 1]).
ag::Var spatial_softmax(const ag::Var& x, int H, int W);

// Sinusoidal embedding of normalized diffusion steps, shape [B, dim]; constant.
ag::Var step_embedding(const std::vector<int>& k, int K, int dim);

}  // namespace aifnav::policy
