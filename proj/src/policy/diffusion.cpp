#include "aifnav/policy/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aifnav/diffcore/adam.hpp"
#include "aifnav/diffcore/checkpoint.hpp"

namespace aifnav::policy {

using namespace ag;

Tensor make_obs_pair(const Tensor& o_prev, const Tensor& o_now) {
    Tensor out({6, env::kObsH, env::kObsW});
    std::copy(o_prev.data(), o_prev.data() + o_prev.size(), out.data());
    std::copy(o_now.data(), o_now.data() + o_now.size(), out.data() + o_prev.size());
    return out;
}

Var noising(const Var& a0, int k, const Tensor& eps, const NoiseSchedule& sched) {
    if (k < 1 || k > sched.K) throw std::invalid_argument("noising: k out of range");
    if (eps.shape() != a0->value.shape()) throw std::invalid_argument("noising: eps shape mismatch");
    float abar = sched.alpha_bar[k];
    return add(scale(a0, std::sqrt(abar)), scale(constant(eps), std::sqrt(1.0f - abar)));
}

Var dp_loss(const DenoiserNet& net, const Tensor& obs_pair, const Tensor& a0,
            const NoiseSchedule& sched, Rng& rng) {
    const auto& sh = a0.shape();
    if (sh.size() != 3 || sh[0] < 1) throw std::invalid_argument("dp_loss: batch must be [B,2,T]");
    const int B = sh[0];
    const int64_t per = a0.size() / B;

    std::vector<int> ks(B);
    Tensor eps(sh), a_k(sh);
    for (int i = 0; i < B; ++i) {
        ks[i] = 1 + rng.randint(sched.K);
        float c1 = std::sqrt(sched.alpha_bar[ks[i]]);
        float c2 = std::sqrt(1.0f - sched.alpha_bar[ks[i]]);
        for (int64_t j = 0; j < per; ++j) {
            float e = rng.normal(0.0f, 1.0f);
            eps[i * per + j] = e;
            a_k[i * per + j] = c1 * a0[i * per + j] + c2 * e;
        }
    }

    Var cond = net.condition(net.encode_obs(constant(obs_pair)), ks, sched.K);
    Var pred = net.forward(constant(a_k), cond);
    return mse(pred, constant(eps));
}

Tensor ddpm_step(const DenoiserNet& net, const Tensor& a_k, int k, const Var& cond,
                 const NoiseSchedule& sched, Rng& rng) {
    if (k < 1 || k > sched.K) throw std::invalid_argument("ddpm_step: k out of range");
    NoGradGuard ng;
    Tensor eps_hat = net.forward(constant(a_k), cond)->value;
    float alpha = sched.alpha[k];
    float abar = sched.alpha_bar[k];
    float c = (1.0f - alpha) / std::sqrt(1.0f - abar);
    float inv = 1.0f / std::sqrt(alpha);
    Tensor out(a_k.shape());
    for (int64_t i = 0; i < out.size(); ++i) {
        float z = (k > 1) ? rng.normal(0.0f, 1.0f) : 0.0f;
        out[i] = inv * (a_k[i] - c * eps_hat[i]) + sched.sigma[k] * z;
    }
    return out;
}

namespace {
std::vector<int> ddim_steps(int K, int n_steps) {
    std::vector<int> ks;
    for (int j = n_steps; j >= 1; --j) {
        int k = static_cast<int>(std::lround(static_cast<double>(j) * K / n_steps));
        k = std::max(1, std::min(K, k));
        if (ks.empty() || k < ks.back()) ks.push_back(k);
    }
    return ks;  // descending, ends at the smallest step
}
}  // namespace

Tensor ddim_sample(const Policy& policy, const Tensor& obs_pair_single, int n_candidates,
                   int n_steps, Rng& rng) {
    const NoiseSchedule& sched = policy.sched;
    if (n_steps > sched.K) throw std::invalid_argument("ddim_sample: n_steps exceeds K");
    if (n_candidates < 1) throw std::invalid_argument("ddim_sample: need at least one candidate");
    NoGradGuard ng;

    const int T = policy.cfg.horizon();
    const DenoiserNet& net = *policy.net;

    // Replicate the single observation context across the candidate batch.
    Tensor obs({n_candidates, 6, env::kObsH, env::kObsW});
    const int64_t per_obs = obs_pair_single.size();
    for (int i = 0; i < n_candidates; ++i)
        std::copy(obs_pair_single.data(), obs_pair_single.data() + per_obs,
                  obs.data() + i * per_obs);
    Var obs_feat = net.encode_obs(constant(obs));

    Tensor a({n_candidates, 2, T});
    rng.fill_normal(a);

    std::vector<int> ks = ddim_steps(sched.K, n_steps);
    for (size_t j = 0; j < ks.size(); ++j) {
        int k = ks[j];
        int k_next = (j + 1 < ks.size()) ? ks[j + 1] : 0;
        std::vector<int> kvec(n_candidates, k);
        Var cond = net.condition(obs_feat, kvec, sched.K);
        Tensor eps_hat = net.forward(constant(a), cond)->value;

        float abar = sched.alpha_bar[k];
        float abar_next = sched.alpha_bar[k_next];  // alpha_bar[0] = 1
        float ca = std::sqrt(abar_next) / std::sqrt(abar);
        float ce = std::sqrt(1.0f - abar_next) - ca * std::sqrt(1.0f - abar);
        for (int64_t i = 0; i < a.size(); ++i) a[i] = ca * a[i] + ce * eps_hat[i];
    }

    // Denormalize to action units and clamp to bounds.
    for (int n = 0; n < n_candidates; ++n)
        for (int d = 0; d < 2; ++d)
            for (int t = 0; t < T; ++t) {
                float& v = a[(n * 2 + d) * T + t];
                v = policy.denormalize(v, d);
                v = (d == 0) ? std::clamp(v, 0.0f, policy.cfg.v_max)
                             : std::clamp(v, -policy.cfg.omega_max, policy.cfg.omega_max);
            }
    return a;
}

Policy train_policy(const env::Dataset& data, const PolicyConfig& cfg,
                    const std::function<void(int, float)>& progress, int report_every) {
    Policy p;
    p.cfg = cfg;
    p.sched = make_schedule(cfg.K_train, cfg.schedule_kind);
    DenoiserConfig dc;
    dc.horizon = cfg.horizon();
    p.net = std::make_shared<DenoiserNet>(dc, splitmix64(cfg.seed ^ 0x9e3779b97f4a7c15ULL));
    data.action_stats(p.act_mean, p.act_std);
    for (int d = 0; d < 2; ++d) p.act_std[d] = std::max(p.act_std[d], 1e-3f);

    const int T = cfg.horizon();
    if (data.seq_len < T) throw std::invalid_argument("train_policy: sequences shorter than horizon");

    Rng rng(splitmix64(cfg.seed ^ fnv1a("train_policy")));
    Adam opt(p.net->params.all(), AdamConfig{cfg.lr});

    Tensor obs_pair({cfg.batch, 6, env::kObsH, env::kObsW});
    Tensor a0({cfg.batch, 2, T});
    const int64_t per_img = static_cast<int64_t>(env::kObsC) * env::kObsH * env::kObsW;

    for (int step = 1; step <= cfg.steps; ++step) {
        for (int i = 0; i < cfg.batch; ++i) {
            int s = rng.randint(data.n_sequences);
            int t = 1 + rng.randint(data.seq_len - 1 - cfg.T_F);
            const float* ob = data.obs[s].data();
            std::copy(ob + (t - 1) * per_img, ob + (t + 1) * per_img,
                      obs_pair.data() + i * 2 * per_img);
            for (int j = 0; j < T; ++j) {
                env::Action act = data.act_at(s, t - 1 + j);
                a0[(i * 2 + 0) * T + j] = p.normalize(act.v, 0);
                a0[(i * 2 + 1) * T + j] = p.normalize(act.omega, 1);
            }
        }
        Var loss = dp_loss(*p.net, obs_pair, a0, p.sched, rng);
        p.net->params.zero_grad();
        backward(loss);
        opt.step();
        if (progress && (step % report_every == 0 || step == cfg.steps))
            progress(step, loss->value[0]);
    }
    return p;
}

void Policy::save(const std::string& dir) const {
    nlohmann::json meta{
        {"kind", "policy"},
        {"T_F", cfg.T_F},
        {"T_a", cfg.T_a},
        {"K_train", cfg.K_train},
        {"K_sample", cfg.K_sample},
        {"schedule", cfg.schedule_kind},
        {"v_max", cfg.v_max},
        {"omega_max", cfg.omega_max},
        {"act_mean", {act_mean[0], act_mean[1]}},
        {"act_std", {act_std[0], act_std[1]}},
    };
    save_checkpoint(dir, net->params.all(), meta);
}

Policy Policy::load(const std::string& dir) {
    Policy p;
    nlohmann::json meta;
    {
        // Peek at metadata first to size the network.
        load_checkpoint(dir, &meta);
    }
    p.cfg.T_F = meta.at("T_F");
    p.cfg.T_a = meta.at("T_a");
    p.cfg.K_train = meta.at("K_train");
    p.cfg.K_sample = meta.at("K_sample");
    p.cfg.schedule_kind = meta.at("schedule");
    p.cfg.v_max = meta.at("v_max");
    p.cfg.omega_max = meta.at("omega_max");
    for (int d = 0; d < 2; ++d) {
        p.act_mean[d] = meta.at("act_mean")[d];
        p.act_std[d] = meta.at("act_std")[d];
    }
    p.sched = make_schedule(p.cfg.K_train, p.cfg.schedule_kind);
    DenoiserConfig dc;
    dc.horizon = p.cfg.horizon();
    p.net = std::make_shared<DenoiserNet>(dc, 0);
    load_into(dir, p.net->params.all());
    return p;
}

}  // namespace aifnav::policy
