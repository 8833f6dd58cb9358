#pragma once

#include <cmath>
#include <vector>

#include "aifnav/diffcore/autodiff.hpp"

namespace aifnav::ag {

struct AdamConfig {
    float lr = 3e-4f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    float clip_norm = 100.0f;  // global gradient-norm clip; <=0 disables
};

// Adam with bias correction and global norm clipping. A step with any
// non-finite gradient is rejected outright and counted.
class Adam {
public:
    Adam(std::vector<Var> params, AdamConfig cfg = {}) : params_(std::move(params)), cfg_(cfg) {
        for (const auto& p : params_) {
            m_.push_back(Tensor::zeros(p->value.shape()));
            v_.push_back(Tensor::zeros(p->value.shape()));
        }
    }

    // Returns false when the step was rejected because of non-finite grads.
    bool step() {
        double sq = 0.0;
        for (const auto& p : params_) {
            const Tensor& g = p->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) {
                if (!std::isfinite(g[i])) {
                    ++skipped_;
                    return false;
                }
                sq += static_cast<double>(g[i]) * g[i];
            }
        }
        float clip = 1.0f;
        if (cfg_.clip_norm > 0.0f) {
            float norm = static_cast<float>(std::sqrt(sq));
            if (norm > cfg_.clip_norm) clip = cfg_.clip_norm / norm;
        }
        ++t_;
        const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
        const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
        for (size_t j = 0; j < params_.size(); ++j) {
            Tensor& w = params_[j]->value;
            const Tensor& g = params_[j]->grad;
            Tensor& m = m_[j];
            Tensor& v = v_[j];
            for (int64_t i = 0; i < w.size(); ++i) {
                float gi = g[i] * clip;
                m[i] = cfg_.beta1 * m[i] + (1.0f - cfg_.beta1) * gi;
                v[i] = cfg_.beta2 * v[i] + (1.0f - cfg_.beta2) * gi * gi;
                w[i] -= cfg_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
            }
        }
        return true;
    }

    void zero_grad() {
        for (auto& p : params_) {
            Tensor& g = p->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) g[i] = 0.0f;
        }
    }

    int64_t steps() const { return t_; }
    int skipped() const { return skipped_; }
    AdamConfig& config() { return cfg_; }

private:
    std::vector<Var> params_;
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    int64_t t_ = 0;
    int skipped_ = 0;
};

}  // namespace aifnav::ag
