#pragma once

#include <memory>
#include <string>
#include <vector>

#include "aifnav/diffcore/nn.hpp"
#include "aifnav/envsim/env.hpp"

namespace aifnav::wm {

struct WmConfig {
    // latent structure
    int d_h = 32, d_l = 128;
    int sh_vars = 4, sh_classes = 4;
    int sl_vars = 8, sl_classes = 8;
    float tau_h = 64.0f, tau_l = 4.0f;
    // loss
    float beta = 1.0f;
    float free_bits = 1.0f;  // nats per categorical variable
    // encoder / heads
    int embed = 128;
    int enc_c1 = 8, enc_c2 = 16, enc_c3 = 32;
    int head_hidden = 128;
    // ablation: single-level RSSM (no high level, tau = 1)
    bool single_level = false;

    int sh_dim() const { return single_level ? 0 : sh_vars * sh_classes; }
    int sl_dim() const { return sl_vars * sl_classes; }
    int act_dim() const { return 2; }
};

// Per-variable categorical distributions; probs shape [B, vars, classes].
struct CatDist {
    int vars = 0, classes = 0;
    ag::Var probs;
};

// Batched latent state. All entries are graph nodes during training and
// plain constants during rollouts.
struct Latent {
    ag::Var u_h, d_h, s_h;  // empty in single-level mode
    ag::Var u_l, d_l, s_l;
};

// Scalar loss components of one wm_loss evaluation (per-step averages).
struct WmLossParts {
    float total = 0, recon = 0, kl_low = 0, kl_high = 0, dl_pred = 0;
};

struct Mtrssm {
    WmConfig cfg;
    ag::ParamSet params;

    // observation encoder (3 conv + projection to `embed`)
    ag::Conv2d ec1, ec2, ec3;
    ag::Linear e_fc;

    // dynamics cores: drive = Linear(concat(inputs)); leaky integration outside
    ag::Linear hi_core;  // [d_h, sh_dim] -> d_h
    ag::Linear lo_core;  // [d_l, sl_dim, sh_dim, act] -> d_l

    // stochastic heads
    ag::Linear prior_h_head;               // d_h -> sh logits
    ag::Linear prior_l_head;               // d_l -> sl logits
    ag::Linear post_h_fc1, post_h_fc2;     // [d_h, d_l_prev] -> hidden -> sh logits
    ag::Linear post_l_fc1, post_l_fc2;     // [d_l, embed] -> hidden -> sl logits
    ag::Linear dl_pred_fc1, dl_pred_fc2;   // z_h = [d_h, s_h] -> hidden -> d_l

    // decoder: fc -> 8 residual conv blocks across 2 pixel-shuffle upsamplings
    ag::Linear dec_fc;                      // latent -> 16 x 6 x 8
    std::vector<ag::Conv2d> dec_res;        // 8 residual 3x3 convs
    ag::Conv2d dec_up1, dec_out;            // post-shuffle channel mix + RGB head

    Mtrssm() = default;
    Mtrssm(const WmConfig& cfg, uint64_t seed);

    int latent_dim() const { return cfg.d_h * !cfg.single_level + cfg.sh_dim() + cfg.d_l + cfg.sl_dim(); }

    ag::Var encode_obs(const ag::Var& obs) const;  // [B,3,24,32] -> [B,embed]

    // Leaky-integrator steps: u' = (1-1/tau) u + (1/tau)(W x + b), d' = tanh(u').
    std::pair<ag::Var, ag::Var> step_high(const ag::Var& u_h, const ag::Var& d_h,
                                          const ag::Var& s_h_prev) const;
    std::pair<ag::Var, ag::Var> step_low(const ag::Var& u_l, const ag::Var& d_l,
                                         const ag::Var& s_l_prev, const ag::Var& s_h_now,
                                         const ag::Var& a_prev) const;

    CatDist prior_high(const ag::Var& d_h) const;
    CatDist prior_low(const ag::Var& d_l) const;
    CatDist posterior_high(const ag::Var& d_h, const ag::Var& d_l_prev) const;
    CatDist posterior_low(const ag::Var& d_l, const ag::Var& obs_embedding) const;

    ag::Var predict_dl(const ag::Var& d_h, const ag::Var& s_h) const;  // from z_h

    ag::Var decode(const Latent& z) const;  // -> [B,3,24,32] in [0,1]

    Latent init_latent(int batch) const;  // zero integrators, zero one-hots

    // One full posterior step (filtering). a_prev: [B,2]; obs embedding of o_t.
    Latent posterior_step(const Latent& prev, const ag::Var& a_prev, const ag::Var& emb,
                          Rng& rng) const;
    // One imagination step: s_h from posterior_high(d_h, d_l_prev), s_l from prior_low.
    Latent prior_step(const Latent& prev, const ag::Var& a_prev, Rng& rng) const;

    // VFE loss over a window. obs: [T][B,3,24,32]; act: [T][B,2] (act[t] is the
    // action that led into obs[t]). Returns scalar graph node; fills `parts`
    // and leaves the detached final latent in `carry` for TBPTT.
    // relaxed_samples replaces categorical draws with their probabilities,
    // making the loss fully differentiable for finite-difference checks.
    ag::Var wm_loss(const std::vector<Tensor>& obs, const std::vector<Tensor>& act,
                    const Latent& init, Rng& rng, WmLossParts* parts, Latent* carry,
                    bool relaxed_samples = false) const;

    void save(const std::string& dir) const;
    static Mtrssm load(const std::string& dir);
};

// Straight-through one-hot sample per variable of the distribution.
ag::Var sample_st(const CatDist& dist, Rng& rng);

// Per-variable KL: [B, vars] tensor of sum_c q (log q - log p), log floor 1e-8.
ag::Var kl_pervar(const CatDist& q, const CatDist& p);
// Scalar KL: batch mean of the per-variable sum.
ag::Var kl_categorical(const CatDist& q, const CatDist& p);

// Detach a latent from the graph (values kept, history dropped).
Latent detach(const Latent& z);

// Posterior rollout over aligned (obs, act) sequences; one latent per step.
std::vector<Latent> filter(const Mtrssm& m, const std::vector<Tensor>& obs,
                           const std::vector<Tensor>& act, const Latent& init, Rng& rng);

// Open-loop rollout driven by actions only; also decodes one image per step.
struct Imagination {
    std::vector<Latent> latents;
    std::vector<Tensor> obs_pred;  // [B,3,24,32] each
};
Imagination imagine(const Mtrssm& m, const Latent& init, const std::vector<Tensor>& act,
                    int horizon, Rng& rng);

}  // namespace aifnav::wm
