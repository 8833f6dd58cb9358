#pragma once

#include <string>
#include <vector>

#include "aifnav/planner/efe.hpp"
#include "aifnav/policy/diffusion.hpp"

namespace aifnav::planner {

struct EpisodeLimits {
    int max_steps = 1000;
    float goal_radius = 0.7f;
    float heading_tol = 1.0471975512f;  // 60 degrees
    float dt = 0.2f;
};

// One planning iteration: every candidate's score and what was chosen.
struct IterationRecord {
    int n = 0;
    float precision = 0;
    std::vector<EfeBreakdown> candidates;
    std::vector<float> cand_mean_abs_omega;  // over the executable chunk
    int chosen = 0;
};

struct StepRecord {
    env::Pose pose;  // after the step
    env::Action action;
    bool collided = false;
};

struct EpisodeLog {
    uint64_t seed = 0;
    std::string mode;
    env::Pose start, goal;
    bool success = false;
    int steps = 0;
    int collisions = 0;
    std::vector<IterationRecord> iterations;
    std::vector<StepRecord> step_records;

    // One JSON object per line: a header, then iteration and step records
    // in execution order, then a summary line.
    void save_jsonl(const std::string& path) const;
    static EpisodeLog load_jsonl(const std::string& path);
};

// Closed-loop navigation: filter history, propose candidates with the
// diffusion policy, score them by expected free energy, execute the first
// T_a actions, repeat. Fully reproducible from `seed`.
EpisodeLog run_episode(const env::WorldSpec& world, const env::Pose& start,
                       const env::Pose& goal, const policy::Policy& pol,
                       const wm::Mtrssm& model, const FeatureEncoder& features,
                       const PlannerConfig& cfg, const PrecisionSchedule& sched,
                       const EpisodeLimits& limits, uint64_t seed);

}  // namespace aifnav::planner
