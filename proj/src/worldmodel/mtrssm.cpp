#include "aifnav/worldmodel/mtrssm.hpp"

#include <cmath>
#include <stdexcept>

#include "aifnav/diffcore/checkpoint.hpp"

namespace aifnav::wm {

using namespace ag;

namespace {

Var softmax_pervar(const Var& logits_flat, int B, int vars, int classes) {
    Var l = reshape(logits_flat, {B * vars, classes});
    return reshape(softmax(l), {B, vars, classes});
}

Var leaky_step(const Var& u, const Var& drive, float tau) {
    float k = 1.0f / tau;
    return add(scale(u, 1.0f - k), scale(drive, k));
}

}  // namespace

Mtrssm::Mtrssm(const WmConfig& c, uint64_t seed) : cfg(c) {
    Rng rng(seed);
    const int B = 0;
    (void)B;
    ec1 = Conv2d(params, "enc.c1", 3, cfg.enc_c1, 3, 1, 1, rng);
    ec2 = Conv2d(params, "enc.c2", cfg.enc_c1, cfg.enc_c2, 3, 2, 1, rng);
    ec3 = Conv2d(params, "enc.c3", cfg.enc_c2, cfg.enc_c3, 3, 2, 1, rng);
    e_fc = Linear(params, "enc.fc", cfg.enc_c3 * 6 * 8, cfg.embed, rng);

    if (!cfg.single_level) {
        hi_core = Linear(params, "hi.core", cfg.d_h + cfg.sh_dim(), cfg.d_h, rng);
        prior_h_head = Linear(params, "hi.prior", cfg.d_h, cfg.sh_dim(), rng);
        post_h_fc1 = Linear(params, "hi.post1", cfg.d_h + cfg.d_l, cfg.head_hidden, rng);
        post_h_fc2 = Linear(params, "hi.post2", cfg.head_hidden, cfg.sh_dim(), rng);
        dl_pred_fc1 = Linear(params, "hi.dlp1", cfg.d_h + cfg.sh_dim(), cfg.head_hidden, rng);
        dl_pred_fc2 = Linear(params, "hi.dlp2", cfg.head_hidden, cfg.d_l, rng);
    }
    lo_core = Linear(params, "lo.core", cfg.d_l + cfg.sl_dim() + cfg.sh_dim() + cfg.act_dim(),
                     cfg.d_l, rng);
    prior_l_head = Linear(params, "lo.prior", cfg.d_l, cfg.sl_vars * cfg.sl_classes, rng);
    post_l_fc1 = Linear(params, "lo.post1", cfg.d_l + cfg.embed, cfg.head_hidden, rng);
    post_l_fc2 = Linear(params, "lo.post2", cfg.head_hidden, cfg.sl_vars * cfg.sl_classes, rng);

    dec_fc = Linear(params, "dec.fc", latent_dim(), 16 * 6 * 8, rng);
    for (int i = 0; i < 8; ++i) {
        int ch = i < 4 ? 16 : 8;
        dec_res.push_back(Conv2d(params, "dec.res" + std::to_string(i), ch, ch, 3, 1, 1, rng));
    }
    dec_up1 = Conv2d(params, "dec.up1", 4, 8, 3, 1, 1, rng);  // after first pixel shuffle
    dec_out = Conv2d(params, "dec.out", 2, 3, 3, 1, 1, rng);  // after second pixel shuffle
}

Var Mtrssm::encode_obs(const Var& obs) const {
    Var h = silu(ec1(obs));  // [B, c1, 24, 32]
    h = silu(ec2(h));        // [B, c2, 12, 16]
    h = silu(ec3(h));        // [B, c3, 6, 8]
    int B = h->value.shape()[0];
    return e_fc(reshape(h, {B, cfg.enc_c3 * 6 * 8}));
}

std::pair<Var, Var> Mtrssm::step_high(const Var& u_h, const Var& d_h, const Var& s_h_prev) const {
    Var drive = hi_core(concat({d_h, s_h_prev}, 1));
    Var u = leaky_step(u_h, drive, cfg.tau_h);
    return {u, tanh_op(u)};
}

std::pair<Var, Var> Mtrssm::step_low(const Var& u_l, const Var& d_l, const Var& s_l_prev,
                                     const Var& s_h_now, const Var& a_prev) const {
    std::vector<Var> in{d_l, s_l_prev};
    if (!cfg.single_level) in.push_back(s_h_now);
    in.push_back(a_prev);
    Var drive = lo_core(concat(in, 1));
    float tau = cfg.single_level ? 1.0f : cfg.tau_l;
    Var u = leaky_step(u_l, drive, tau);
    return {u, tanh_op(u)};
}

CatDist Mtrssm::prior_high(const Var& d_h) const {
    int B = d_h->value.shape()[0];
    return {cfg.sh_vars, cfg.sh_classes,
            softmax_pervar(prior_h_head(d_h), B, cfg.sh_vars, cfg.sh_classes)};
}

CatDist Mtrssm::prior_low(const Var& d_l) const {
    int B = d_l->value.shape()[0];
    return {cfg.sl_vars, cfg.sl_classes,
            softmax_pervar(prior_l_head(d_l), B, cfg.sl_vars, cfg.sl_classes)};
}

CatDist Mtrssm::posterior_high(const Var& d_h, const Var& d_l_prev) const {
    int B = d_h->value.shape()[0];
    Var h = silu(post_h_fc1(concat({d_h, d_l_prev}, 1)));
    return {cfg.sh_vars, cfg.sh_classes,
            softmax_pervar(post_h_fc2(h), B, cfg.sh_vars, cfg.sh_classes)};
}

CatDist Mtrssm::posterior_low(const Var& d_l, const Var& obs_embedding) const {
    int B = d_l->value.shape()[0];
    Var h = silu(post_l_fc1(concat({d_l, obs_embedding}, 1)));
    return {cfg.sl_vars, cfg.sl_classes,
            softmax_pervar(post_l_fc2(h), B, cfg.sl_vars, cfg.sl_classes)};
}

Var Mtrssm::predict_dl(const Var& d_h, const Var& s_h) const {
    return dl_pred_fc2(silu(dl_pred_fc1(concat({d_h, s_h}, 1))));
}

Var Mtrssm::decode(const Latent& z) const {
    std::vector<Var> in;
    if (!cfg.single_level) {
        in.push_back(z.d_h);
        in.push_back(z.s_h);
    }
    in.push_back(z.d_l);
    in.push_back(z.s_l);
    Var x = concat(in, 1);
    int B = x->value.shape()[0];
    Var h = reshape(silu(dec_fc(x)), {B, 16, 6, 8});
    auto res = [this](Var v, int i) { return add(v, dec_res[i](silu(v))); };
    h = res(h, 0);
    h = res(h, 1);
    h = res(h, 2);
    h = res(h, 3);
    h = silu(dec_up1(pixel_shuffle(h, 2)));  // [B,8,12,16]
    h = res(h, 4);
    h = res(h, 5);
    h = res(h, 6);
    h = res(h, 7);
    h = pixel_shuffle(h, 2);  // [B,2,24,32]
    return sigmoid(dec_out(h));
}

Latent Mtrssm::init_latent(int B) const {
    Latent z;
    if (!cfg.single_level) {
        z.u_h = constant(Tensor::zeros({B, cfg.d_h}));
        z.d_h = constant(Tensor::zeros({B, cfg.d_h}));
        z.s_h = constant(Tensor::zeros({B, cfg.sh_dim()}));
    }
    z.u_l = constant(Tensor::zeros({B, cfg.d_l}));
    z.d_l = constant(Tensor::zeros({B, cfg.d_l}));
    z.s_l = constant(Tensor::zeros({B, cfg.sl_dim()}));
    return z;
}

Var sample_st(const CatDist& dist, Rng& rng) {
    const auto& sh = dist.probs->value.shape();
    int B = sh[0];
    Var flat = reshape(dist.probs, {B * dist.vars, dist.classes});
    return reshape(onehot_st_sample(flat, rng), {B, dist.vars * dist.classes});
}

Var kl_pervar(const CatDist& q, const CatDist& p) {
    if (q.vars != p.vars || q.classes != p.classes)
        throw std::invalid_argument("kl: distribution structure mismatch");
    Var elem = mul(q.probs, sub(log_eps(q.probs), log_eps(p.probs)));
    return sum_lastdim(elem);  // [B, vars]
}

Var kl_categorical(const CatDist& q, const CatDist& p) {
    int B = q.probs->value.shape()[0];
    return scale(sum_all(kl_pervar(q, p)), 1.0f / B);
}

Latent detach(const Latent& z) {
    auto dc = [](const Var& v) { return v ? constant(v->value) : Var(); };
    return Latent{dc(z.u_h), dc(z.d_h), dc(z.s_h), dc(z.u_l), dc(z.d_l), dc(z.s_l)};
}

Latent Mtrssm::posterior_step(const Latent& prev, const Var& a_prev, const Var& emb,
                              Rng& rng) const {
    Latent z;
    Var s_h_now;
    if (!cfg.single_level) {
        auto [u_h, d_h] = step_high(prev.u_h, prev.d_h, prev.s_h);
        CatDist q_h = posterior_high(d_h, prev.d_l);
        s_h_now = sample_st(q_h, rng);
        z.u_h = u_h;
        z.d_h = d_h;
        z.s_h = s_h_now;
    }
    auto [u_l, d_l] = step_low(prev.u_l, prev.d_l, prev.s_l, s_h_now, a_prev);
    CatDist q_l = posterior_low(d_l, emb);
    z.u_l = u_l;
    z.d_l = d_l;
    z.s_l = sample_st(q_l, rng);
    return z;
}

Latent Mtrssm::prior_step(const Latent& prev, const Var& a_prev, Rng& rng) const {
    Latent z;
    Var s_h_now;
    if (!cfg.single_level) {
        auto [u_h, d_h] = step_high(prev.u_h, prev.d_h, prev.s_h);
        CatDist q_h = posterior_high(d_h, prev.d_l);
        s_h_now = sample_st(q_h, rng);
        z.u_h = u_h;
        z.d_h = d_h;
        z.s_h = s_h_now;
    }
    auto [u_l, d_l] = step_low(prev.u_l, prev.d_l, prev.s_l, s_h_now, a_prev);
    CatDist p_l = prior_low(d_l);
    z.u_l = u_l;
    z.d_l = d_l;
    z.s_l = sample_st(p_l, rng);
    return z;
}

Var Mtrssm::wm_loss(const std::vector<Tensor>& obs, const std::vector<Tensor>& act,
                    const Latent& init, Rng& rng, WmLossParts* parts, Latent* carry,
                    bool relaxed_samples) const {
    if (obs.size() < 2) throw std::invalid_argument("wm_loss: need at least 2 steps");
    if (obs.size() != act.size()) throw std::invalid_argument("wm_loss: obs/act length mismatch");
    const int T = static_cast<int>(obs.size());
    const int B = obs[0].shape()[0];
    const float n_pix = static_cast<float>(env::kObsC * env::kObsH * env::kObsW);

    auto freebits = [&](const Var& kl_bv) {  // [B, vars] -> scalar, floor per variable
        return scale(sum_all(clamp_min(kl_bv, cfg.free_bits)), 1.0f / B);
    };
    auto draw = [&](const CatDist& d) {
        if (!relaxed_samples) return sample_st(d, rng);
        int b = d.probs->value.shape()[0];
        return reshape(d.probs, {b, d.vars * d.classes});
    };

    Latent z = init;
    Var recon_acc, kl_l_acc, kl_h_acc, dlp_acc;
    auto acc = [](Var& a, const Var& v) { a = a ? add(a, v) : v; };

    for (int t = 0; t < T; ++t) {
        Var a_prev = constant(act[t]);
        Latent nz;
        Var s_h_now;
        if (!cfg.single_level) {
            auto [u_h, d_h] = step_high(z.u_h, z.d_h, z.s_h);
            CatDist q_h = posterior_high(d_h, z.d_l);
            CatDist p_h = prior_high(d_h);
            s_h_now = draw(q_h);
            acc(kl_h_acc, freebits(kl_pervar(q_h, p_h)));
            nz.u_h = u_h;
            nz.d_h = d_h;
            nz.s_h = s_h_now;
        }
        auto [u_l, d_l] = step_low(z.u_l, z.d_l, z.s_l, s_h_now, a_prev);
        if (!cfg.single_level)
            acc(dlp_acc, scale(mse(predict_dl(z.d_h, z.s_h), d_l), 0.5f * cfg.d_l));

        Var o = constant(obs[t]);
        Var emb = encode_obs(o);
        CatDist q_l = posterior_low(d_l, emb);
        CatDist p_l = prior_low(d_l);
        acc(kl_l_acc, freebits(kl_pervar(q_l, p_l)));
        nz.u_l = u_l;
        nz.d_l = d_l;
        nz.s_l = draw(q_l);

        acc(recon_acc, mse(decode(nz), o));
        z = nz;
    }

    float inv_t = 1.0f / T;
    Var recon_mse = scale(recon_acc, inv_t);                     // per-pixel average
    Var recon_nll = scale(recon_mse, 0.5f * n_pix);              // unit-variance Gaussian
    Var kl_l = scale(kl_l_acc, inv_t);
    Var total = add(recon_nll, scale(kl_l, cfg.beta));
    Var kl_h, dlp;
    if (!cfg.single_level) {
        kl_h = scale(kl_h_acc, inv_t);
        dlp = scale(dlp_acc, inv_t);
        total = add(total, add(scale(kl_h, cfg.beta), dlp));
    }

    if (parts) {
        parts->total = total->value[0];
        parts->recon = recon_mse->value[0];
        parts->kl_low = kl_l->value[0];
        parts->kl_high = kl_h ? kl_h->value[0] : 0.0f;
        parts->dl_pred = dlp ? dlp->value[0] : 0.0f;
    }
    if (carry) *carry = detach(z);
    return total;
}

std::vector<Latent> filter(const Mtrssm& m, const std::vector<Tensor>& obs,
                           const std::vector<Tensor>& act, const Latent& init, Rng& rng) {
    if (obs.size() != act.size()) throw std::invalid_argument("filter: obs/act length mismatch");
    NoGradGuard ng;
    std::vector<Latent> out;
    Latent z = init;
    for (size_t t = 0; t < obs.size(); ++t) {
        Var emb = m.encode_obs(constant(obs[t]));
        z = m.posterior_step(z, constant(act[t]), emb, rng);
        out.push_back(z);
    }
    return out;
}

Imagination imagine(const Mtrssm& m, const Latent& init, const std::vector<Tensor>& act,
                    int horizon, Rng& rng) {
    if (horizon < 1) throw std::invalid_argument("imagine: horizon must be >= 1");
    if (static_cast<int>(act.size()) < horizon)
        throw std::invalid_argument("imagine: not enough actions for the horizon");
    NoGradGuard ng;
    Imagination im;
    Latent z = init;
    for (int t = 0; t < horizon; ++t) {
        z = m.prior_step(z, constant(act[t]), rng);
        im.latents.push_back(z);
        im.obs_pred.push_back(m.decode(z)->value);
    }
    return im;
}

void Mtrssm::save(const std::string& dir) const {
    nlohmann::json meta{
        {"kind", "worldmodel"},
        {"d_h", cfg.d_h},
        {"d_l", cfg.d_l},
        {"sh_vars", cfg.sh_vars},
        {"sh_classes", cfg.sh_classes},
        {"sl_vars", cfg.sl_vars},
        {"sl_classes", cfg.sl_classes},
        {"tau_h", cfg.tau_h},
        {"tau_l", cfg.tau_l},
        {"beta", cfg.beta},
        {"free_bits", cfg.free_bits},
        {"embed", cfg.embed},
        {"enc", {cfg.enc_c1, cfg.enc_c2, cfg.enc_c3}},
        {"head_hidden", cfg.head_hidden},
        {"single_level", cfg.single_level},
        {"obs_shape", {env::kObsC, env::kObsH, env::kObsW}},
    };
    save_checkpoint(dir, params.all(), meta);
}

Mtrssm Mtrssm::load(const std::string& dir) {
    nlohmann::json meta;
    load_checkpoint(dir, &meta);
    WmConfig c;
    c.d_h = meta.at("d_h");
    c.d_l = meta.at("d_l");
    c.sh_vars = meta.at("sh_vars");
    c.sh_classes = meta.at("sh_classes");
    c.sl_vars = meta.at("sl_vars");
    c.sl_classes = meta.at("sl_classes");
    c.tau_h = meta.at("tau_h");
    c.tau_l = meta.at("tau_l");
    c.beta = meta.at("beta");
    c.free_bits = meta.at("free_bits");
    c.embed = meta.at("embed");
    c.enc_c1 = meta.at("enc")[0];
    c.enc_c2 = meta.at("enc")[1];
    c.enc_c3 = meta.at("enc")[2];
    c.head_hidden = meta.at("head_hidden");
    c.single_level = meta.at("single_level");
    Mtrssm m(c, 0);
    load_into(dir, m.params.all());
    return m;
}

}  // namespace aifnav::wm
