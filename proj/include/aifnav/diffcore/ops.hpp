#pragma once

#include <vector>

#include "aifnav/diffcore/autodiff.hpp"
#include "aifnav/diffcore/rng.hpp"

namespace aifnav::ag {

// Elementwise / scalar
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, float s);
Var add_scalar(const Var& a, float c);
Var neg(const Var& a);

// Linear algebra
Var matmul(const Var& a, const Var& b);  // [m,k] x [k,n] -> [m,n]
Var bias_add(const Var& x, const Var& b);  // b[C] broadcast over axis 1 of x[N,C,...]

// Convolutions (NCHW / NCL)
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var conv1d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var upsample_nearest1d(const Var& x, int factor);
Var pixel_shuffle(const Var& x, int factor);  // [N,C*r*r,H,W] -> [N,C,H*r,W*r]

// Activations / pointwise
Var tanh_op(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var silu(const Var& a);
Var exp_op(const Var& a);
Var log_eps(const Var& a, float eps = 1e-8f);

// Softmax over the last axis
Var softmax(const Var& x);

// Reductions
Var sum_all(const Var& x);
Var mean_all(const Var& x);
Var sum_lastdim(const Var& x);  // [...,C] -> [...]
Var clamp_min(const Var& x, float lo);
Var sqrt_eps(const Var& x, float eps = 1e-8f);  // sqrt with a floor inside

// Structure
Var concat(const std::vector<Var>& xs, int axis);
Var slice(const Var& x, int axis, int start, int len);
Var reshape(const Var& x, std::vector<int> shape);
Var stopgrad(const Var& x);

// Normalization: normalize over axis 1 of x[N,C,...] per (n, spatial) column.
Var channel_norm(const Var& x, const Var& gamma, const Var& beta, float eps = 1e-5f);
// Normalize over the last dim of x[N,D].
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, float eps = 1e-5f);

// Categorical draw over the last axis; backward is identity onto the
// probability tensor (straight-through).
Var onehot_st_sample(const Var& probs, Rng& rng);

// Composites
Var mse(const Var& a, const Var& b);  // mean squared error, scalar

}  // namespace aifnav::ag
