#include "aifnav/policy/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace aifnav::policy {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Squared-cosine alpha_bar curve with the usual small offset to keep the
// first step close to noise-free.
double abar_cosine(double t) {
    const double s = 0.008;
    double f = std::cos((t + s) / (1.0 + s) * kPi / 2.0);
    return f * f;
}
}  // namespace

NoiseSchedule make_schedule(int K, const std::string& kind) {
    if (K < 2) throw std::invalid_argument("make_schedule: K must be >= 2");
    if (kind != "squared_cosine")
        throw std::invalid_argument("make_schedule: unknown schedule kind '" + kind + "'");

    NoiseSchedule s;
    s.K = K;
    s.alpha.assign(K + 1, 1.0f);
    s.alpha_bar.assign(K + 1, 1.0f);
    s.sigma.assign(K + 1, 0.0f);

    const double f0 = abar_cosine(0.0);
    double abar_prev = 1.0;
    for (int k = 1; k <= K; ++k) {
        double abar = abar_cosine(static_cast<double>(k) / K) / f0;
        double alpha = abar / abar_prev;
        alpha = std::min(std::max(alpha, 1e-4), 0.9999);  // keep alpha in (0,1)
        abar = abar_prev * alpha;
        s.alpha[k] = static_cast<float>(alpha);
        s.alpha_bar[k] = static_cast<float>(abar);
        double var = (1.0 - abar_prev) / (1.0 - abar) * (1.0 - alpha);
        s.sigma[k] = (k == 1) ? 0.0f : static_cast<float>(std::sqrt(var));
        abar_prev = abar;
    }
    return s;
}

}  // namespace aifnav::policy
