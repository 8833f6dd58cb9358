#pragma once

#include <cmath>
#include <string>

#include "aifnav/diffcore/ops.hpp"

namespace aifnav::ag {

inline Tensor uniform_init(Rng& rng, std::vector<int> shape, int fan_in) {
    Tensor t(std::move(shape));
    float s = 1.0f / std::sqrt(static_cast<float>(fan_in));
    rng.fill_uniform(t, -s, s);
    return t;
}

struct Linear {
    Var W, b;

    Linear() = default;
    Linear(ParamSet& ps, const std::string& name, int in, int out, Rng& rng)
        : W(ps.add(name + ".W", uniform_init(rng, {in, out}, in))),
          b(ps.add(name + ".b", Tensor::zeros({out}))) {}

    Var operator()(const Var& x) const { return bias_add(matmul(x, W), b); }
};

struct Conv2d {
    Var W, b;
    int stride = 1, pad = 0;

    Conv2d() = default;
    Conv2d(ParamSet& ps, const std::string& name, int cin, int cout, int k, int stride_, int pad_, Rng& rng)
        : W(ps.add(name + ".W", uniform_init(rng, {cout, cin, k, k}, cin * k * k))),
          b(ps.add(name + ".b", Tensor::zeros({cout}))),
          stride(stride_),
          pad(pad_) {}

    Var operator()(const Var& x) const { return conv2d(x, W, b, stride, pad); }
};

struct Conv1d {
    Var W, b;
    int stride = 1, pad = 0;

    Conv1d() = default;
    Conv1d(ParamSet& ps, const std::string& name, int cin, int cout, int k, int stride_, int pad_, Rng& rng)
        : W(ps.add(name + ".W", uniform_init(rng, {cout, cin, k}, cin * k))),
          b(ps.add(name + ".b", Tensor::zeros({cout}))),
          stride(stride_),
          pad(pad_) {}

    Var operator()(const Var& x) const { return conv1d(x, W, b, stride, pad); }
};

struct ChannelNorm {
    Var gamma, beta;

    ChannelNorm() = default;
    ChannelNorm(ParamSet& ps, const std::string& name, int c)
        : gamma(ps.add(name + ".gamma", Tensor::full({c}, 1.0f))),
          beta(ps.add(name + ".beta", Tensor::zeros({c}))) {}

    Var operator()(const Var& x) const { return channel_norm(x, gamma, beta); }
};

struct LayerNorm {
    Var gamma, beta;

    LayerNorm() = default;
    LayerNorm(ParamSet& ps, const std::string& name, int d)
        : gamma(ps.add(name + ".gamma", Tensor::full({d}, 1.0f))),
          beta(ps.add(name + ".beta", Tensor::zeros({d}))) {}

    Var operator()(const Var& x) const { return layer_norm(x, gamma, beta); }
};

}  // namespace aifnav::ag
