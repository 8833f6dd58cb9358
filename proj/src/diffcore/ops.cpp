#include "aifnav/diffcore/ops.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace aifnav::ag {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + Tensor::shape_str(a.shape()) +
                                " vs " + Tensor::shape_str(b.shape()));
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
    if (!same_shape(a, b)) shape_error(op, a, b);
}

void axpy(Tensor& dst, const Tensor& src, float s = 1.0f) {
    for (int64_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
}

// Elementwise op with backward dL/dx = dL/dy * dfdx(x, y).
template <typename F, typename G>
Var pointwise(const Var& a, F&& f, G&& dfdx) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.size(); ++i) out[i] = f(a->value[i]);
    Tensor saved = out;
    Var pa = a;
    return make_op(out, {a}, [pa, saved, dfdx](Node& n) {
        Tensor& g = pa->ensure_grad();
        for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * dfdx(pa->value[i], saved[i]);
    });
}

}  // namespace

Var add(const Var& a, const Var& b) {
    require_same("add", a->value, b->value);
    Tensor out = a->value.clone();
    axpy(out, b->value);
    Var pa = a, pb = b;
    return make_op(out, {a, b}, [pa, pb](Node& n) {
        if (pa->requires_grad) axpy(pa->ensure_grad(), n.grad);
        if (pb->requires_grad) axpy(pb->ensure_grad(), n.grad);
    });
}

Var sub(const Var& a, const Var& b) {
    require_same("sub", a->value, b->value);
    Tensor out = a->value.clone();
    axpy(out, b->value, -1.0f);
    Var pa = a, pb = b;
    return make_op(out, {a, b}, [pa, pb](Node& n) {
        if (pa->requires_grad) axpy(pa->ensure_grad(), n.grad);
        if (pb->requires_grad) axpy(pb->ensure_grad(), n.grad, -1.0f);
    });
}

Var mul(const Var& a, const Var& b) {
    require_same("mul", a->value, b->value);
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * b->value[i];
    Var pa = a, pb = b;
    return make_op(out, {a, b}, [pa, pb](Node& n) {
        if (pa->requires_grad) {
            Tensor& g = pa->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * pb->value[i];
        }
        if (pb->requires_grad) {
            Tensor& g = pb->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * pa->value[i];
        }
    });
}

Var scale(const Var& a, float s) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * s;
    Var pa = a;
    return make_op(out, {a}, [pa, s](Node& n) { axpy(pa->ensure_grad(), n.grad, s); });
}

Var add_scalar(const Var& a, float c) {
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + c;
    Var pa = a;
    return make_op(out, {a}, [pa](Node& n) { axpy(pa->ensure_grad(), n.grad); });
}

Var neg(const Var& a) { return scale(a, -1.0f); }

Var matmul(const Var& a, const Var& b) {
    const Tensor& A = a->value;
    const Tensor& B = b->value;
    if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0)) shape_error("matmul", A, B);
    const int m = A.dim(0), k = A.dim(1), n = B.dim(1);
    Tensor out({m, n});
    MatMap(out.data(), m, n).noalias() = ConstMatMap(A.data(), m, k) * ConstMatMap(B.data(), k, n);
    Var pa = a, pb = b;
    return make_op(out, {a, b}, [pa, pb, m, k, n](Node& nd) {
        ConstMatMap G(nd.grad.data(), m, n);
        if (pa->requires_grad) {
            MatMap(pa->ensure_grad().data(), m, k).noalias() +=
                G * ConstMatMap(pb->value.data(), k, n).transpose();
        }
        if (pb->requires_grad) {
            MatMap(pb->ensure_grad().data(), k, n).noalias() +=
                ConstMatMap(pa->value.data(), m, k).transpose() * G;
        }
    });
}

Var bias_add(const Var& x, const Var& b) {
    const Tensor& X = x->value;
    const Tensor& B = b->value;
    if (X.rank() < 2 || B.rank() != 1 || B.dim(0) != X.dim(1)) shape_error("bias_add", X, B);
    const int64_t N = X.dim(0), C = X.dim(1), S = X.size() / (N * C);
    Tensor out = X.clone();
    for (int64_t i = 0; i < N; ++i)
        for (int64_t c = 0; c < C; ++c) {
            float bc = B[c];
            float* p = out.data() + (i * C + c) * S;
            for (int64_t s = 0; s < S; ++s) p[s] += bc;
        }
    Var px = x, pb = b;
    return make_op(out, {x, b}, [px, pb, N, C, S](Node& n) {
        if (px->requires_grad) axpy(px->ensure_grad(), n.grad);
        if (pb->requires_grad) {
            Tensor& g = pb->ensure_grad();
            for (int64_t i = 0; i < N; ++i)
                for (int64_t c = 0; c < C; ++c) {
                    const float* p = n.grad.data() + (i * C + c) * S;
                    float acc = 0.0f;
                    for (int64_t s = 0; s < S; ++s) acc += p[s];
                    g[c] += acc;
                }
        }
    });
}

// ---------------------------------------------------------------------------
// Convolutions via im2col + GEMM. Columns are recomputed in the backward pass
// instead of being cached across a TBPTT window.

namespace {

int conv_out(int n, int k, int stride, int pad) { return (n + 2 * pad - k) / stride + 1; }

// col: [C*kh*kw, Ho*Wo]
void im2col(const float* x, int C, int H, int W, int kh, int kw, int stride, int pad, float* col) {
    const int Ho = conv_out(H, kh, stride, pad), Wo = conv_out(W, kw, stride, pad);
    const int cols = Ho * Wo;
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < kh; ++i)
            for (int j = 0; j < kw; ++j) {
                float* row = col + ((c * kh + i) * kw + j) * cols;
                for (int oy = 0; oy < Ho; ++oy) {
                    int y = oy * stride - pad + i;
                    if (y < 0 || y >= H) {
                        for (int ox = 0; ox < Wo; ++ox) row[oy * Wo + ox] = 0.0f;
                        continue;
                    }
                    for (int ox = 0; ox < Wo; ++ox) {
                        int xx = ox * stride - pad + j;
                        row[oy * Wo + ox] = (xx >= 0 && xx < W) ? x[(c * H + y) * W + xx] : 0.0f;
                    }
                }
            }
}

void col2im_acc(const float* col, int C, int H, int W, int kh, int kw, int stride, int pad, float* x) {
    const int Ho = conv_out(H, kh, stride, pad), Wo = conv_out(W, kw, stride, pad);
    const int cols = Ho * Wo;
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < kh; ++i)
            for (int j = 0; j < kw; ++j) {
                const float* row = col + ((c * kh + i) * kw + j) * cols;
                for (int oy = 0; oy < Ho; ++oy) {
                    int y = oy * stride - pad + i;
                    if (y < 0 || y >= H) continue;
                    for (int ox = 0; ox < Wo; ++ox) {
                        int xx = ox * stride - pad + j;
                        if (xx >= 0 && xx < W) x[(c * H + y) * W + xx] += row[oy * Wo + ox];
                    }
                }
            }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    const Tensor& X = x->value;
    const Tensor& W = w->value;
    if (X.rank() != 4 || W.rank() != 4 || X.dim(1) != W.dim(1)) shape_error("conv2d", X, W);
    const int N = X.dim(0), C = X.dim(1), H = X.dim(2), Wd = X.dim(3);
    const int F = W.dim(0), kh = W.dim(2), kw = W.dim(3);
    const int Ho = conv_out(H, kh, stride, pad), Wo = conv_out(Wd, kw, stride, pad);
    if (Ho <= 0 || Wo <= 0) shape_error("conv2d", X, W);

    const int krows = C * kh * kw, cols = Ho * Wo;
    Tensor out({N, F, Ho, Wo});
    std::vector<float> col(static_cast<size_t>(krows) * cols);
    ConstMatMap Wm(W.data(), F, krows);
    for (int i = 0; i < N; ++i) {
        im2col(X.data() + static_cast<int64_t>(i) * C * H * Wd, C, H, Wd, kh, kw, stride, pad, col.data());
        MatMap(out.data() + static_cast<int64_t>(i) * F * cols, F, cols).noalias() =
            Wm * ConstMatMap(col.data(), krows, cols);
    }
    Var out_var = make_op(out, {x, w},
                          [px = x, pw = w, N, C, H, Wd, F, kh, kw, stride, pad, krows, cols](Node& n) {
        std::vector<float> col(static_cast<size_t>(krows) * cols);
        for (int i = 0; i < N; ++i) {
            ConstMatMap G(n.grad.data() + static_cast<int64_t>(i) * F * cols, F, cols);
            if (pw->requires_grad) {
                im2col(px->value.data() + static_cast<int64_t>(i) * C * H * Wd, C, H, Wd, kh, kw,
                       stride, pad, col.data());
                MatMap(pw->ensure_grad().data(), F, krows).noalias() +=
                    G * ConstMatMap(col.data(), krows, cols).transpose();
            }
            if (px->requires_grad) {
                MatMap(col.data(), krows, cols).noalias() =
                    ConstMatMap(pw->value.data(), F, krows).transpose() * G;
                col2im_acc(col.data(), C, H, Wd, kh, kw, stride, pad,
                           px->ensure_grad().data() + static_cast<int64_t>(i) * C * H * Wd);
            }
        }
    });
    return b ? bias_add(out_var, b) : out_var;
}

Var conv1d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    const Tensor& X = x->value;
    const Tensor& W = w->value;
    if (X.rank() != 3 || W.rank() != 3 || X.dim(1) != W.dim(1)) shape_error("conv1d", X, W);
    // conv2d pads both spatial axes, so zero-pad the length axis here and run
    // the height-1 2-D convolution unpadded.
    Var xp = x;
    if (pad > 0) {
        Var z = constant(Tensor::zeros({X.dim(0), X.dim(1), pad}));
        xp = concat({z, x, z}, 2);
    }
    const Tensor& XP = xp->value;
    Var x4 = reshape(xp, {XP.dim(0), XP.dim(1), 1, XP.dim(2)});
    Var w4 = reshape(w, {W.dim(0), W.dim(1), 1, W.dim(2)});
    Var y = conv2d(x4, w4, b, stride, 0);
    const Tensor& Y = y->value;
    return reshape(y, {Y.dim(0), Y.dim(1), Y.dim(3)});
}

Var upsample_nearest1d(const Var& x, int factor) {
    const Tensor& X = x->value;
    if (X.rank() != 3) throw std::invalid_argument("upsample_nearest1d: need rank-3 input, got " +
                                                   Tensor::shape_str(X.shape()));
    const int N = X.dim(0), C = X.dim(1), L = X.dim(2);
    Tensor out({N, C, L * factor});
    for (int64_t nc = 0; nc < static_cast<int64_t>(N) * C; ++nc)
        for (int l = 0; l < L; ++l)
            for (int r = 0; r < factor; ++r) out[nc * L * factor + l * factor + r] = X[nc * L + l];
    Var px = x;
    return make_op(out, {x}, [px, N, C, L, factor](Node& n) {
        Tensor& g = px->ensure_grad();
        for (int64_t nc = 0; nc < static_cast<int64_t>(N) * C; ++nc)
            for (int l = 0; l < L; ++l) {
                float acc = 0.0f;
                for (int r = 0; r < factor; ++r) acc += n.grad[nc * L * factor + l * factor + r];
                g[nc * L + l] += acc;
            }
    });
}

Var pixel_shuffle(const Var& x, int factor) {
    const Tensor& X = x->value;
    const int r = factor;
    if (X.rank() != 4 || X.dim(1) % (r * r) != 0)
        throw std::invalid_argument("pixel_shuffle: bad input shape " + Tensor::shape_str(X.shape()));
    const int N = X.dim(0), C = X.dim(1) / (r * r), H = X.dim(2), W = X.dim(3);
    auto idx_in = [C, H, W, r](int n, int c, int dy, int dx, int h, int w) -> int64_t {
        return (((static_cast<int64_t>(n) * C * r * r) + (static_cast<int64_t>(c) * r + dy) * r + dx) * H + h) * W + w;
    };
    auto idx_out = [C, H, W, r](int n, int c, int y, int xx) -> int64_t {
        return ((static_cast<int64_t>(n) * C + c) * (H * r) + y) * (W * r) + xx;
    };
    Tensor out({N, C, H * r, W * r});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w)
                    for (int dy = 0; dy < r; ++dy)
                        for (int dx = 0; dx < r; ++dx)
                            out[idx_out(n, c, h * r + dy, w * r + dx)] = X[idx_in(n, c, dy, dx, h, w)];
    Var px = x;
    return make_op(out, {x}, [px, N, C, H, W, r, idx_in, idx_out](Node& nd) {
        Tensor& g = px->ensure_grad();
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c)
                for (int h = 0; h < H; ++h)
                    for (int w = 0; w < W; ++w)
                        for (int dy = 0; dy < r; ++dy)
                            for (int dx = 0; dx < r; ++dx)
                                g[idx_in(n, c, dy, dx, h, w)] += nd.grad[idx_out(n, c, h * r + dy, w * r + dx)];
    });
}

Var tanh_op(const Var& a) {
    return pointwise(a, [](float v) { return std::tanh(v); },
                     [](float, float y) { return 1.0f - y * y; });
}

Var sigmoid(const Var& a) {
    return pointwise(a, [](float v) { return 1.0f / (1.0f + std::exp(-v)); },
                     [](float, float y) { return y * (1.0f - y); });
}

Var relu(const Var& a) {
    return pointwise(a, [](float v) { return v > 0.0f ? v : 0.0f; },
                     [](float v, float) { return v > 0.0f ? 1.0f : 0.0f; });
}

Var silu(const Var& a) {
    return pointwise(a, [](float v) { return v / (1.0f + std::exp(-v)); },
                     [](float v, float) {
                         float s = 1.0f / (1.0f + std::exp(-v));
                         return s * (1.0f + v * (1.0f - s));
                     });
}

Var exp_op(const Var& a) {
    return pointwise(a, [](float v) { return std::exp(v); }, [](float, float y) { return y; });
}

Var log_eps(const Var& a, float eps) {
    return pointwise(a, [eps](float v) { return std::log(v < eps ? eps : v); },
                     [eps](float v, float) { return v < eps ? 0.0f : 1.0f / v; });
}

Var softmax(const Var& x) {
    const Tensor& X = x->value;
    const int C = X.dim(X.rank() - 1);
    const int64_t rows = X.size() / C;
    Tensor out(X.shape());
    for (int64_t r = 0; r < rows; ++r) {
        const float* p = X.data() + r * C;
        float* q = out.data() + r * C;
        float mx = p[0];
        for (int c = 1; c < C; ++c) mx = std::max(mx, p[c]);
        float z = 0.0f;
        for (int c = 0; c < C; ++c) {
            q[c] = std::exp(p[c] - mx);
            z += q[c];
        }
        for (int c = 0; c < C; ++c) q[c] /= z;
    }
    Tensor y = out;
    Var px = x;
    return make_op(out, {x}, [px, y, rows, C](Node& n) {
        Tensor& g = px->ensure_grad();
        for (int64_t r = 0; r < rows; ++r) {
            const float* yv = y.data() + r * C;
            const float* gy = n.grad.data() + r * C;
            float dot = 0.0f;
            for (int c = 0; c < C; ++c) dot += gy[c] * yv[c];
            float* gx = g.data() + r * C;
            for (int c = 0; c < C; ++c) gx[c] += yv[c] * (gy[c] - dot);
        }
    });
}

Var sum_all(const Var& x) {
    double acc = 0.0;
    for (int64_t i = 0; i < x->value.size(); ++i) acc += x->value[i];
    Var px = x;
    return make_op(Tensor::scalar(static_cast<float>(acc)), {x}, [px](Node& n) {
        Tensor& g = px->ensure_grad();
        float s = n.grad[0];
        for (int64_t i = 0; i < g.size(); ++i) g[i] += s;
    });
}

Var mean_all(const Var& x) { return scale(sum_all(x), 1.0f / static_cast<float>(x->value.size())); }

Var sum_lastdim(const Var& x) {
    const Tensor& X = x->value;
    if (X.rank() < 2) throw std::invalid_argument("sum_lastdim: need rank>=2, got " +
                                                  Tensor::shape_str(X.shape()));
    const int C = X.dim(X.rank() - 1);
    const int64_t rows = X.size() / C;
    std::vector<int> oshape(X.shape().begin(), X.shape().end() - 1);
    Tensor out(oshape);
    for (int64_t r = 0; r < rows; ++r) {
        float acc = 0.0f;
        const float* p = X.data() + r * C;
        for (int c = 0; c < C; ++c) acc += p[c];
        out[r] = acc;
    }
    Var px = x;
    return make_op(out, {x}, [px, rows, C](Node& n) {
        Tensor& g = px->ensure_grad();
        for (int64_t r = 0; r < rows; ++r) {
            float s = n.grad[r];
            float* gp = g.data() + r * C;
            for (int c = 0; c < C; ++c) gp[c] += s;
        }
    });
}

Var clamp_min(const Var& x, float lo) {
    return pointwise(x, [lo](float v) { return v < lo ? lo : v; },
                     [lo](float v, float) { return v < lo ? 0.0f : 1.0f; });
}

Var sqrt_eps(const Var& x, float eps) {
    return pointwise(x, [eps](float v) { return std::sqrt(v < eps ? eps : v); },
                     [eps](float v, float y) { return v < eps ? 0.0f : 0.5f / y; });
}

Var concat(const std::vector<Var>& xs, int axis) {
    if (xs.empty()) throw std::invalid_argument("concat: empty input list");
    const int rank = xs[0]->value.rank();
    if (axis < 0) axis += rank;
    std::vector<int> oshape = xs[0]->value.shape();
    int total = 0;
    for (const auto& v : xs) {
        if (v->value.rank() != rank) shape_error("concat", xs[0]->value, v->value);
        for (int d = 0; d < rank; ++d)
            if (d != axis && v->value.dim(d) != oshape[d]) shape_error("concat", xs[0]->value, v->value);
        total += v->value.dim(axis);
    }
    oshape[axis] = total;
    int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= oshape[d];
    for (int d = axis + 1; d < rank; ++d) inner *= oshape[d];

    Tensor out(oshape);
    int64_t off = 0;
    for (const auto& v : xs) {
        const int64_t span = v->value.dim(axis) * inner;
        for (int64_t o = 0; o < outer; ++o) {
            const float* src = v->value.data() + o * span;
            float* dst = out.data() + o * total * inner + off;
            std::copy(src, src + span, dst);
        }
        off += span;
    }
    std::vector<Var> parents(xs.begin(), xs.end());
    return make_op(out, parents, [xs, outer, inner, total](Node& n) {
        int64_t off = 0;
        for (const auto& v : xs) {
            const int64_t vspan = v->value.size() / outer;
            if (v->requires_grad) {
                Tensor& g = v->ensure_grad();
                for (int64_t o = 0; o < outer; ++o) {
                    const float* src = n.grad.data() + o * total * inner + off;
                    float* dst = g.data() + o * vspan;
                    for (int64_t i = 0; i < vspan; ++i) dst[i] += src[i];
                }
            }
            off += vspan;
        }
    });
}

Var slice(const Var& x, int axis, int start, int len) {
    const Tensor& X = x->value;
    const int rank = X.rank();
    if (axis < 0) axis += rank;
    if (axis < 0 || axis >= rank || start < 0 || len <= 0 || start + len > X.dim(axis))
        throw std::invalid_argument("slice: bad range [" + std::to_string(start) + "," +
                                    std::to_string(start + len) + ") on axis " + std::to_string(axis) +
                                    " of " + Tensor::shape_str(X.shape()));
    std::vector<int> oshape = X.shape();
    oshape[axis] = len;
    int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= X.dim(d);
    for (int d = axis + 1; d < rank; ++d) inner *= X.dim(d);
    const int64_t in_span = X.dim(axis) * inner, out_span = static_cast<int64_t>(len) * inner;

    Tensor out(oshape);
    for (int64_t o = 0; o < outer; ++o) {
        const float* src = X.data() + o * in_span + start * inner;
        std::copy(src, src + out_span, out.data() + o * out_span);
    }
    Var px = x;
    return make_op(out, {x}, [px, outer, inner, in_span, out_span, start](Node& n) {
        Tensor& g = px->ensure_grad();
        for (int64_t o = 0; o < outer; ++o) {
            const float* src = n.grad.data() + o * out_span;
            float* dst = g.data() + o * in_span + start * inner;
            for (int64_t i = 0; i < out_span; ++i) dst[i] += src[i];
        }
    });
}

Var reshape(const Var& x, std::vector<int> shape) {
    Tensor out = x->value.reshaped(shape);
    Var px = x;
    return make_op(out, {x}, [px](Node& n) {
        axpy(px->ensure_grad(), n.grad.reshaped(px->value.shape()));
    });
}

Var stopgrad(const Var& x) { return constant(x->value); }

Var channel_norm(const Var& x, const Var& gamma, const Var& beta, float eps) {
    const Tensor& X = x->value;
    if (X.rank() < 2 || gamma->value.dim(0) != X.dim(1) || beta->value.dim(0) != X.dim(1))
        shape_error("channel_norm", X, gamma->value);
    const int64_t N = X.dim(0), C = X.dim(1), S = X.size() / (N * C);

    Tensor xhat(X.shape());
    Tensor inv_sigma({static_cast<int>(N * S)});
    Tensor out(X.shape());
    for (int64_t i = 0; i < N; ++i)
        for (int64_t s = 0; s < S; ++s) {
            float mu = 0.0f;
            for (int64_t c = 0; c < C; ++c) mu += X[(i * C + c) * S + s];
            mu /= static_cast<float>(C);
            float var = 0.0f;
            for (int64_t c = 0; c < C; ++c) {
                float d = X[(i * C + c) * S + s] - mu;
                var += d * d;
            }
            var /= static_cast<float>(C);
            float inv = 1.0f / std::sqrt(var + eps);
            inv_sigma[i * S + s] = inv;
            for (int64_t c = 0; c < C; ++c) {
                float xh = (X[(i * C + c) * S + s] - mu) * inv;
                xhat[(i * C + c) * S + s] = xh;
                out[(i * C + c) * S + s] = gamma->value[c] * xh + beta->value[c];
            }
        }
    Var px = x, pg = gamma, pb = beta;
    return make_op(out, {x, gamma, beta}, [px, pg, pb, xhat, inv_sigma, N, C, S](Node& n) {
        for (int64_t i = 0; i < N; ++i)
            for (int64_t s = 0; s < S; ++s) {
                float mean_gdy = 0.0f, mean_gdy_xh = 0.0f;
                for (int64_t c = 0; c < C; ++c) {
                    float gdy = pg->value[c] * n.grad[(i * C + c) * S + s];
                    mean_gdy += gdy;
                    mean_gdy_xh += gdy * xhat[(i * C + c) * S + s];
                }
                mean_gdy /= static_cast<float>(C);
                mean_gdy_xh /= static_cast<float>(C);
                if (px->requires_grad) {
                    Tensor& g = px->ensure_grad();
                    float inv = inv_sigma[i * S + s];
                    for (int64_t c = 0; c < C; ++c) {
                        float gdy = pg->value[c] * n.grad[(i * C + c) * S + s];
                        g[(i * C + c) * S + s] +=
                            inv * (gdy - mean_gdy - xhat[(i * C + c) * S + s] * mean_gdy_xh);
                    }
                }
                if (pg->requires_grad) {
                    Tensor& gg = pg->ensure_grad();
                    Tensor& gb = pb->ensure_grad();
                    for (int64_t c = 0; c < C; ++c) {
                        float dy = n.grad[(i * C + c) * S + s];
                        gg[c] += dy * xhat[(i * C + c) * S + s];
                        gb[c] += dy;
                    }
                }
            }
    });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, float eps) {
    const Tensor& X = x->value;
    if (X.rank() != 2) throw std::invalid_argument("layer_norm: need rank-2 input, got " +
                                                   Tensor::shape_str(X.shape()));
    // Normalizing over the last dim of [N,D] == channel_norm on [N,D,1].
    Var x3 = reshape(x, {X.dim(0), X.dim(1), 1});
    return reshape(channel_norm(x3, gamma, beta, eps), X.shape());
}

Var onehot_st_sample(const Var& probs, Rng& rng) {
    const Tensor& P = probs->value;
    const int C = P.dim(P.rank() - 1);
    const int64_t rows = P.size() / C;
    Tensor out(P.shape());
    for (int64_t r = 0; r < rows; ++r) {
        const float* p = P.data() + r * C;
        float u = rng.uniform();
        float acc = 0.0f;
        int pick = C - 1;
        for (int c = 0; c < C; ++c) {
            acc += p[c];
            if (u < acc) {
                pick = c;
                break;
            }
        }
        out[r * C + pick] = 1.0f;
    }
    Var pp = probs;
    return make_op(out, {probs}, [pp](Node& n) { axpy(pp->ensure_grad(), n.grad); });
}

Var mse(const Var& a, const Var& b) {
    Var d = sub(a, b);
    return mean_all(mul(d, d));
}

}  // namespace aifnav::ag
