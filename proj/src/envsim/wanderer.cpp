#include "aifnav/envsim/wanderer.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace aifnav::env {

namespace {

struct WandererState {
    float wp_x = 0.0f, wp_y = 0.0f;
    int spin_steps = 0;
    float spin_omega = 0.0f;
    int evade_steps = 0;
    float evade_omega = 0.0f;
};

void pick_waypoint(const WorldSpec& w, Rng& rng, WandererState& s) {
    // half the waypoints hug the walls so every wall gets visited
    float m = w.robot_radius + 0.15f;
    if (rng.uniform() < 0.5f) {
        int wall = rng.randint(4);
        float u = rng.uniform(m, (wall % 2 == 0 ? w.width : w.height) - m);
        switch (wall) {
            case 0: s.wp_x = u; s.wp_y = m; break;
            case 1: s.wp_x = w.width - m; s.wp_y = u; break;
            case 2: s.wp_x = u; s.wp_y = w.height - m; break;
            default: s.wp_x = m; s.wp_y = u; break;
        }
    } else {
        s.wp_x = rng.uniform(m, w.width - m);
        s.wp_y = rng.uniform(m, w.height - m);
    }
}

Action wanderer_act(const WorldSpec& w, const Pose& p, Rng& rng, WandererState& s) {
    if (s.spin_steps > 0) {
        --s.spin_steps;
        return Action::clamped(w, 0.0f, s.spin_omega);
    }
    if (rng.uniform() < 0.006f) {
        s.spin_steps = 8 + rng.randint(16);
        s.spin_omega = (rng.uniform() < 0.5f ? -1.0f : 1.0f) * w.omega_max;
        return Action::clamped(w, 0.0f, s.spin_omega);
    }

    float ahead = wall_distance(w, p, 0.0f);
    if (s.evade_steps > 0) {
        --s.evade_steps;
        return Action::clamped(w, 0.3f * w.v_max, s.evade_omega);
    }
    if (ahead < w.robot_radius + 0.35f) {
        float left = wall_distance(w, p, 0.6f);
        float right = wall_distance(w, p, -0.6f);
        s.evade_steps = 6 + rng.randint(8);
        s.evade_omega = (left > right ? 1.0f : -1.0f) * w.omega_max;
        pick_waypoint(w, rng, s);
        return Action::clamped(w, 0.3f * w.v_max, s.evade_omega);
    }

    float ddx = s.wp_x - p.x, ddy = s.wp_y - p.y;
    if (std::sqrt(ddx * ddx + ddy * ddy) < 0.4f) pick_waypoint(w, rng, s);
    float bearing = std::atan2(s.wp_y - p.y, s.wp_x - p.x);
    float err = wrap_angle(bearing - p.heading);
    float omega = std::clamp(2.0f * err, -w.omega_max, w.omega_max) + rng.normal(0.0f, 0.05f);
    float v = w.v_max * std::max(0.2f, std::cos(err));
    return Action::clamped(w, v, omega);
}

}  // namespace

Dataset wanderer_collect(const WorldSpec& world, uint64_t seed, int n_sequences, int seq_len,
                         float dt) {
    if (n_sequences < 1) throw std::invalid_argument("wanderer_collect: n_sequences must be >= 1");
    if (world.width <= 2.0f * world.robot_radius || world.height <= 2.0f * world.robot_radius)
        throw std::invalid_argument("wanderer_collect: degenerate world, no free space");

    Dataset d;
    d.dt = dt;
    d.seq_len = seq_len;
    d.n_sequences = n_sequences;
    d.seed = seed;
    d.world_hash = world.hash();
    Rng root(seed);
    const int64_t obs_n = static_cast<int64_t>(kObsC) * kObsH * kObsW;

    for (int s = 0; s < n_sequences; ++s) {
        Rng rng = root.child("sequence", static_cast<uint64_t>(s));
        float m = world.robot_radius + 0.3f;
        Pose p{rng.uniform(m, world.width - m), rng.uniform(m, world.height - m),
               rng.uniform(-3.14159265f, 3.14159265f)};
        WandererState ws;
        pick_waypoint(world, rng, ws);

        std::vector<float> obs_seq, act_seq, pose_seq;
        obs_seq.reserve(obs_n * seq_len);
        act_seq.reserve(2LL * seq_len);
        pose_seq.reserve(3LL * seq_len);
        for (int t = 0; t < seq_len; ++t) {
            Tensor o = world.obs_noise_sigma > 0.0f ? render_noisy(world, p, rng, world.obs_noise_sigma)
                                                    : render(world, p);
            obs_seq.insert(obs_seq.end(), o.data(), o.data() + obs_n);
            Action a = wanderer_act(world, p, rng, ws);
            act_seq.push_back(a.v);
            act_seq.push_back(a.omega);
            pose_seq.push_back(p.x);
            pose_seq.push_back(p.y);
            pose_seq.push_back(p.heading);
            p = step(world, p, a, dt).pose;
        }
        d.obs.push_back(std::move(obs_seq));
        d.act.push_back(std::move(act_seq));
        d.pose.push_back(std::move(pose_seq));
    }
    return d;
}

float coverage_fraction(const Dataset& d, int seq, const WorldSpec& world, int grid_n) {
    std::set<int> cells;
    for (int t = 0; t < d.seq_len; ++t) {
        Pose p = d.pose_at(seq, t);
        int cx = std::min(grid_n - 1, static_cast<int>(p.x / world.width * grid_n));
        int cy = std::min(grid_n - 1, static_cast<int>(p.y / world.height * grid_n));
        cells.insert(cy * grid_n + cx);
    }
    return static_cast<float>(cells.size()) / (grid_n * grid_n);
}

}  // namespace aifnav::env
