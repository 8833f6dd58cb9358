#pragma once

#include <vector>

#include "aifnav/planner/features.hpp"
#include "aifnav/worldmodel/mtrssm.hpp"

namespace aifnav::planner {

// Sigmoidal precision over planning iterations: starts exploration-heavy,
// shifts weight to the goal term as the episode progresses.
struct PrecisionSchedule {
    double floor = 0.08;
    double ceiling = 3.0;
    double slope = 0.6;
    double midpoint = 10.0;

    // Double precision keeps the schedule strictly increasing even deep in
    // the sigmoid tails.
    double operator()(double n) const;
};

enum class Mode { kFull, kRssm, kOnlyExtrinsic };

struct PlannerConfig {
    int M = 5;             // high-level latent samples
    int N = 5;             // low-level latent samples per high sample
    int n_candidates = 8;  // action sequences scored per iteration
    int plan_horizon = 0;  // future steps scored; 0 = the whole candidate
    Mode mode = Mode::kFull;
    bool argmax_samples = false;  // replace draws with argmax (diagnostics)
};

// Per-candidate score decomposition. total = -mean(epistemic) +
// precision * mean(distance); only_extrinsic drops the epistemic term.
struct EfeBreakdown {
    std::vector<float> epistemic_steps;  // mean KL per future step
    std::vector<float> extrinsic_steps;  // mean squared feature distance
    float precision = 0;
    float epistemic = 0;
    float extrinsic = 0;
    float total = 0;
};

// Scores one candidate action sequence [2, horizon] (column 0 is the past
// action; columns 1.. are the future) from a filtered latent of batch 1.
// M x N imagination threads branch per step: the high level advances and
// samples once per thread group, the low level branches per thread, each
// imagined observation is decoded, re-encoded, and scored.
EfeBreakdown efe_evaluate(const wm::Mtrssm& model, const FeatureEncoder& f,
                          const Tensor& candidate, const wm::Latent& current,
                          const Tensor& goal_feat, const PlannerConfig& cfg,
                          float precision_value, Rng& rng);

// Argmin of total G; ties break toward the lowest index.
int select_action(const std::vector<EfeBreakdown>& breakdowns);

}  // namespace aifnav::planner
