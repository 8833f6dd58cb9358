#pragma once

#include <functional>
#include <memory>
#include <string>

#include "aifnav/envsim/dataset.hpp"
#include "aifnav/policy/denoiser.hpp"
#include "aifnav/policy/schedule.hpp"

namespace aifnav::policy {

struct PolicyConfig {
    int T_F = 16;        // future actions in the denoised sequence
    int T_a = 8;         // actions actually executed per inference
    int K_train = 100;   // diffusion steps during training
    int K_sample = 10;   // sampler steps at deployment (DDIM)
    std::string schedule_kind = "squared_cosine";
    float v_max = 0.3f, omega_max = 1.0f;  // clamp bounds after denormalization

    float lr = 1e-3f;
    int batch = 32;
    int steps = 2000;
    uint64_t seed = 0;

    int horizon() const { return T_F + 2; }  // a_{t-1}, a_t, .., a_{t+T_F}
};

struct Policy {
    PolicyConfig cfg;
    NoiseSchedule sched;
    std::shared_ptr<DenoiserNet> net;
    float act_mean[2] = {0, 0};
    float act_std[2] = {1, 1};

    void save(const std::string& dir) const;
    static Policy load(const std::string& dir);

    float normalize(float a, int dim) const { return (a - act_mean[dim]) / act_std[dim]; }
    float denormalize(float a, int dim) const { return a * act_std[dim] + act_mean[dim]; }
};

// Forward noising a_k = sqrt(abar_k) a0 + sqrt(1 - abar_k) eps (one k for the
// whole tensor). eps must match a0's shape.
ag::Var noising(const ag::Var& a0, int k, const Tensor& eps, const NoiseSchedule& sched);

// Denoising loss over a batch: per item draw k ~ U{1..K} and eps ~ N(0, I),
// predict eps from (obs context, noised normalized actions, k).
// obs_pair: [B, 6, 24, 32]; a0: [B, 2, horizon], already normalized.
ag::Var dp_loss(const DenoiserNet& net, const Tensor& obs_pair, const Tensor& a0,
                const NoiseSchedule& sched, Rng& rng);

// One reverse-diffusion (DDPM) step; adds sigma_k noise except at k = 1.
// a_k: [B, 2, T]; cond: conditioning for step k. Runs without gradients.
Tensor ddpm_step(const DenoiserNet& net, const Tensor& a_k, int k, const ag::Var& cond,
                 const NoiseSchedule& sched, Rng& rng);

// Deterministic DDIM (eta = 0) over an evenly spaced step subsequence.
// Returns [n_candidates, 2, horizon] in action units, clamped to bounds.
Tensor ddim_sample(const Policy& policy, const Tensor& obs_pair_single, int n_candidates,
                   int n_steps, Rng& rng);

// Trains the denoiser on (obs context, action window) pairs drawn from the
// dataset. `progress` (optional) is called every `report_every` steps.
Policy train_policy(const env::Dataset& data, const PolicyConfig& cfg,
                    const std::function<void(int step, float loss)>& progress = nullptr,
                    int report_every = 100);

// Builds the [B, 6, 24, 32] observation-context tensor from two frames.
Tensor make_obs_pair(const Tensor& o_prev, const Tensor& o_now);

}  // namespace aifnav::policy
