#pragma once

#include <string>
#include <vector>

namespace aifnav::policy {

// Diffusion noise schedule. Tables are 1-indexed by diffusion step k; index 0
// holds the k=0 convention alpha_bar[0] = 1 used by the samplers.
struct NoiseSchedule {
    int K = 0;
    std::vector<float> alpha;      // alpha[k], k in 1..K (alpha[0] unused = 1)
    std::vector<float> alpha_bar;  // alpha_bar[k] = prod_{s<=k} alpha[s], alpha_bar[0] = 1
    std::vector<float> sigma;      // sigma[k]^2 = (1-abar[k-1])/(1-abar[k]) * (1-alpha[k])
};

// kind: "squared_cosine" (the only schedule provided). K >= 2 required.
NoiseSchedule make_schedule(int K, const std::string& kind = "squared_cosine");

}  // namespace aifnav::policy
