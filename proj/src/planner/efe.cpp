#include "aifnav/planner/efe.hpp"

#include <cmath>
#include <stdexcept>

namespace aifnav::planner {

using namespace ag;
using wm::CatDist;
using wm::Latent;

double PrecisionSchedule::operator()(double n) const {
    return floor + (ceiling - floor) / (1.0 + std::exp(-slope * (n - midpoint)));
}

namespace {

// Repeats each of the M rows N times: [M, D] -> [M*N, D], row i*N+j = row i.
Tensor tile_rows(const Tensor& t, int reps) {
    int M = t.shape()[0];
    int64_t D = t.size() / M;
    Tensor out({M * reps, int(D)});
    for (int i = 0; i < M; ++i)
        for (int r = 0; r < reps; ++r)
            std::copy(t.data() + i * D, t.data() + (i + 1) * D,
                      out.data() + (int64_t(i) * reps + r) * D);
    return out;
}

// Takes every `stride`-th row: [M*stride, D] -> [M, D].
Tensor strided_rows(const Tensor& t, int stride) {
    int rows = t.shape()[0] / stride;
    int64_t D = t.size() / t.shape()[0];
    Tensor out({rows, int(D)});
    for (int i = 0; i < rows; ++i)
        std::copy(t.data() + int64_t(i) * stride * D, t.data() + (int64_t(i) * stride + 1) * D,
                  out.data() + i * D);
    return out;
}

// One-hot at the per-variable argmax, same layout as sample_st's output.
Var argmax_onehot(const CatDist& d) {
    const Tensor& p = d.probs->value;
    int B = p.shape()[0];
    Tensor out = Tensor::zeros({B, d.vars * d.classes});
    for (int r = 0; r < B * d.vars; ++r) {
        int best = 0;
        for (int c = 1; c < d.classes; ++c)
            if (p[r * d.classes + c] > p[r * d.classes + best]) best = c;
        out[r * d.classes + best] = 1.0f;
    }
    return constant(out);
}

}  // namespace

EfeBreakdown efe_evaluate(const wm::Mtrssm& model, const FeatureEncoder& f,
                          const Tensor& candidate, const Latent& current,
                          const Tensor& goal_feat, const PlannerConfig& cfg,
                          float precision_value, Rng& rng) {
    if (candidate.rank() != 2 || candidate.shape()[0] != 2 || candidate.shape()[1] < 2)
        throw std::invalid_argument("efe_evaluate: candidate must be [2, horizon>=2]");
    if (!current.d_l || current.d_l->value.shape()[0] != 1)
        throw std::invalid_argument("efe_evaluate: latent must come from a batch-1 filter");
    if (cfg.M < 1 || cfg.N < 1) throw std::invalid_argument("efe_evaluate: M, N must be >= 1");
    const bool single = model.cfg.single_level;
    if (!single && !current.d_h)
        throw std::invalid_argument("efe_evaluate: latent missing the high level");

    NoGradGuard ng;
    const int H = candidate.shape()[1];
    const int future = H - 1;
    const int T = cfg.plan_horizon > 0 ? std::min(cfg.plan_horizon, future) : future;
    const int MN = cfg.M * cfg.N;

    auto draw = [&](const CatDist& d) {
        return cfg.argmax_samples ? argmax_onehot(d) : wm::sample_st(d, rng);
    };

    // Replicate the filtered latent: high level at batch M, low at M*N.
    Var u_h, d_h, s_h;
    if (!single) {
        u_h = constant(tile_rows(current.u_h->value, cfg.M));
        d_h = constant(tile_rows(current.d_h->value, cfg.M));
        s_h = constant(tile_rows(current.s_h->value, cfg.M));
    }
    Var u_l = constant(tile_rows(current.u_l->value, MN));
    Var d_l = constant(tile_rows(current.d_l->value, MN));
    Var s_l = constant(tile_rows(current.s_l->value, MN));

    EfeBreakdown out;
    out.precision = precision_value;
    for (int tau = 1; tau <= T; ++tau) {
        Tensor a({MN, 2});
        for (int i = 0; i < MN; ++i) {
            a[i * 2] = candidate[tau];          // v row
            a[i * 2 + 1] = candidate[H + tau];  // omega row
        }

        Var s_h_mn;
        if (!single) {
            auto [u2, d2] = model.step_high(u_h, d_h, s_h);
            u_h = u2;
            d_h = d2;
            // The high level is shared across a sample's N low threads; its
            // posterior conditions on the group's representative d_l.
            Var d_l_rep = constant(strided_rows(d_l->value, cfg.N));
            CatDist q_h = model.posterior_high(d_h, d_l_rep);
            s_h = draw(q_h);
            s_h_mn = constant(tile_rows(s_h->value, cfg.N));
        }

        auto [ul2, dl2] = model.step_low(u_l, d_l, s_l, s_h_mn, constant(a));
        u_l = ul2;
        d_l = dl2;
        CatDist p_l = model.prior_low(d_l);
        s_l = draw(p_l);

        Latent z;
        if (!single) {
            z.d_h = constant(tile_rows(d_h->value, cfg.N));
            z.s_h = s_h_mn;
        }
        z.d_l = d_l;
        z.s_l = s_l;
        Var o_hat = model.decode(z);

        // Epistemic value: information gained about s_l by seeing the
        // imagined observation.
        CatDist q_l = model.posterior_low(d_l, model.encode_obs(o_hat));
        Tensor kl = wm::kl_pervar(q_l, p_l)->value;  // [MN, vars]
        double epi = 0;
        for (int64_t i = 0; i < kl.size(); ++i) epi += kl[i];
        out.epistemic_steps.push_back(float(epi / MN));

        Tensor feats = f.forward(o_hat)->value;  // [MN, 64]
        double dist = 0;
        for (int i = 0; i < MN; ++i)
            for (int k = 0; k < FeatureEncoder::kFeatDim; ++k) {
                double d = double(feats[i * FeatureEncoder::kFeatDim + k]) - goal_feat[k];
                dist += d * d;
            }
        out.extrinsic_steps.push_back(float(dist / MN));
    }

    double epi = 0, ext = 0;
    for (float v : out.epistemic_steps) epi += v;
    for (float v : out.extrinsic_steps) ext += v;
    out.epistemic = float(epi / T);
    out.extrinsic = float(ext / T);
    out.total = cfg.mode == Mode::kOnlyExtrinsic
                    ? precision_value * out.extrinsic
                    : -out.epistemic + precision_value * out.extrinsic;
    return out;
}

int select_action(const std::vector<EfeBreakdown>& breakdowns) {
    if (breakdowns.empty()) throw std::invalid_argument("select_action: no candidates");
    int best = 0;
    for (int i = 1; i < int(breakdowns.size()); ++i)
        if (breakdowns[i].total < breakdowns[best].total) best = i;
    return best;
}

}  // namespace aifnav::planner
