#include "aifnav/worldmodel/train.hpp"

#include <algorithm>
#include <stdexcept>

#include "aifnav/diffcore/adam.hpp"

namespace aifnav::wm {

using namespace ag;

Mtrssm tbptt_train(const env::Dataset& data, const WmConfig& mc, const WmTrainConfig& tc,
                   WmTrainLog* log, const std::function<void(int, float)>& progress) {
    int usable = tc.max_steps_per_seq > 0 ? std::min(tc.max_steps_per_seq, data.seq_len)
                                          : data.seq_len;
    if (usable < tc.window) throw std::invalid_argument("tbptt_train: sequences shorter than window");
    const int n_windows = usable / tc.window;
    const int64_t per_img = static_cast<int64_t>(env::kObsC) * env::kObsH * env::kObsW;

    Mtrssm model(mc, splitmix64(tc.seed ^ fnv1a("wm_init")));
    Rng rng(splitmix64(tc.seed ^ fnv1a("wm_train")));
    Adam opt(model.params.all(), AdamConfig{tc.lr});

    std::vector<Tensor> obs(tc.window), act(tc.window);

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        double epoch_sum = 0.0;
        int epoch_windows = 0;
        for (int g = 0; g < data.n_sequences; g += tc.batch) {
            const int B = std::min(tc.batch, data.n_sequences - g);
            Latent carry = model.init_latent(B);
            for (int w = 0; w < n_windows; ++w) {
                for (int t = 0; t < tc.window; ++t) {
                    int step = w * tc.window + t;
                    obs[t] = Tensor({B, env::kObsC, env::kObsH, env::kObsW});
                    act[t] = Tensor({B, 2});
                    for (int i = 0; i < B; ++i) {
                        const float* src = data.obs[g + i].data() + step * per_img;
                        std::copy(src, src + per_img, obs[t].data() + i * per_img);
                        if (step > 0) {
                            env::Action a = data.act_at(g + i, step - 1);
                            act[t][i * 2] = a.v;
                            act[t][i * 2 + 1] = a.omega;
                        } else {
                            act[t][i * 2] = act[t][i * 2 + 1] = 0.0f;
                        }
                    }
                }
                WmLossParts parts;
                Var loss = model.wm_loss(obs, act, carry, rng, &parts, &carry);
                model.params.zero_grad();
                backward(loss);
                if (!opt.step() && log) ++log->skipped_steps;
                if (log) log->windows.push_back(parts);
                epoch_sum += parts.total;
                ++epoch_windows;
            }
        }
        float mean_total = static_cast<float>(epoch_sum / std::max(1, epoch_windows));
        if (log) log->epoch_total.push_back(mean_total);
        if (progress) progress(epoch, mean_total);
    }
    return model;
}

}  // namespace aifnav::wm
