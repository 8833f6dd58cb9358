#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "aifnav/diffcore/ops.hpp"

namespace aifnav::testutil {

struct GradCheckResult {
    int checked = 0;
    int failed = 0;
    double worst_rel = 0.0;
    bool ok() const { return failed == 0; }
};

// Central finite differences against reverse-mode gradients.
//
// `f` maps the inputs to the raw (possibly non-scalar) op output; the checker
// applies its own random-sign weighted readout. For the FD quotient the
// readout is evaluated in double precision, so unperturbed output elements
// cancel exactly and the quotient only carries the float32 rounding of the
// elements the perturbation actually touched. The quotient also uses the
// perturbation as realized in float32 storage.
//
// Per input tensor the error is ||ga-gn|| / (||ga||+||gn||): pass at relative
// error < 1e-4, or absolute < 1e-6 for near-zero gradients.
inline GradCheckResult gradcheck(const std::function<ag::Var(const std::vector<ag::Var>&)>& f,
                                 std::vector<ag::Var> inputs, float h = 1e-3f,
                                 double rel_tol = 1e-4, double abs_tol = 1e-6) {
    using namespace ag;
    Var y0 = f(inputs);
    Tensor w(y0->value.shape());
    {
        uint64_t state = 0x7c3a9d1f2b5e0811ULL;
        for (int64_t i = 0; i < w.size(); ++i) {
            state = splitmix64(state);
            w[i] = (state & 1) ? 0.5f : -0.5f;
        }
    }
    auto dot_w = [&w](const Tensor& y) {
        double acc = 0.0;
        for (int64_t i = 0; i < y.size(); ++i) acc += static_cast<double>(y[i]) * w[i];
        return acc;
    };

    backward(sum_all(mul(y0, constant(w))));

    GradCheckResult res;
    for (auto& in : inputs) {
        if (!in->requires_grad) continue;
        const Tensor& analytic = in->grad;
        double d2 = 0.0, a2 = 0.0, n2 = 0.0;
        for (int64_t i = 0; i < in->value.size(); ++i) {
            const float orig = in->value[i];
            const float xp = orig + h, xm = orig - h;
            double fp, fm;
            {
                NoGradGuard ng;
                in->value[i] = xp;
                fp = dot_w(f(inputs)->value);
                in->value[i] = xm;
                fm = dot_w(f(inputs)->value);
                in->value[i] = orig;
            }
            const double num = (fp - fm) / (static_cast<double>(xp) - static_cast<double>(xm));
            const double ana = analytic[i];
            d2 += (ana - num) * (ana - num);
            a2 += ana * ana;
            n2 += num * num;
            ++res.checked;
        }
        const double rel = std::sqrt(d2) / std::max(std::sqrt(a2) + std::sqrt(n2), 1e-12);
        res.worst_rel = std::max(res.worst_rel, rel);
        if (rel >= rel_tol && std::sqrt(d2) >= abs_tol) ++res.failed;
    }
    return res;
}

}  // namespace aifnav::testutil
