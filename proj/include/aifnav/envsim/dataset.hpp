#pragma once

#include <string>
#include <vector>

#include "aifnav/envsim/env.hpp"

namespace aifnav::env {

// Collected experience: equal-length sequences of (observation, action, pose).
// On disk: manifest.json plus per-sequence obs_NNN.f32 (T x 3 x 24 x 32),
// act_NNN.f32 (T x 2), pose_NNN.f32 (T x 3), little-endian float32, row-major.
struct Dataset {
    float dt = 0.2f;
    int seq_len = 0;
    int n_sequences = 0;
    uint64_t seed = 0;
    uint64_t world_hash = 0;

    std::vector<std::vector<float>> obs;   // [n][T*3*24*32]
    std::vector<std::vector<float>> act;   // [n][T*2]
    std::vector<std::vector<float>> pose;  // [n][T*3]

    int64_t total_steps() const { return static_cast<int64_t>(seq_len) * n_sequences; }

    Tensor obs_at(int s, int t) const {
        Tensor o({kObsC, kObsH, kObsW});
        std::copy(obs[s].begin() + static_cast<int64_t>(t) * o.size(),
                  obs[s].begin() + static_cast<int64_t>(t + 1) * o.size(), o.data());
        return o;
    }
    Action act_at(int s, int t) const { return Action{act[s][2 * t], act[s][2 * t + 1]}; }
    Pose pose_at(int s, int t) const {
        return Pose{pose[s][3 * t], pose[s][3 * t + 1], pose[s][3 * t + 2]};
    }

    // Per-dimension action mean/std over the whole dataset.
    void action_stats(float mean[2], float stddev[2]) const;

    void save(const std::string& dir) const;
    static Dataset load(const std::string& dir);
};

}  // namespace aifnav::env
