#pragma once

#include <cstdint>
#include <vector>

#include "aifnav/diffcore/rng.hpp"
#include "aifnav/diffcore/tensor.hpp"

namespace aifnav::env {

inline constexpr int kObsC = 3;
inline constexpr int kObsH = 24;
inline constexpr int kObsW = 32;
inline constexpr int kNumRays = kObsW;
inline constexpr float kFov = 1.5707963267948966f;  // 90 degrees

enum WallTexture : int { kTexAliased = 0, kTexPlain = 1 };

struct Landmark {
    float x = 0.0f, y = 0.0f;
    float r = 0.0f, g = 0.0f, b = 0.0f;
    float size = 0.35f;  // half-extent along the wall
};

// Rectangular arena [0,width] x [0,height]. Walls are indexed 0=south,
// 1=east, 2=north, 3=west and parameterized counterclockwise, so poses at
// corresponding local coordinates on two aliased walls render identically.
struct WorldSpec {
    float width = 8.0f, height = 8.0f;
    float robot_radius = 0.2f;
    float v_max = 0.3f;
    float omega_max = 1.0f;
    int wall_texture[4] = {kTexAliased, kTexAliased, kTexAliased, kTexPlain};
    std::vector<Landmark> landmarks;
    float obs_noise_sigma = 0.0f;

    static WorldSpec default_world();
    uint64_t hash() const;
};

struct Pose {
    float x = 0.0f, y = 0.0f;
    float heading = 0.0f;  // radians in [-pi, pi)
};

struct Action {
    float v = 0.0f;
    float omega = 0.0f;

    static Action clamped(const WorldSpec& w, float v, float omega);
};

// Wraps any finite angle into [-pi, pi).
float wrap_angle(float a);

struct StepResult {
    Pose pose;
    bool collided = false;
};

// Unicycle kinematics with wall clamping at robot radius.
StepResult step(const WorldSpec& world, const Pose& pose, const Action& a, float dt);

// Egocentric raycast render, [3,24,32] in [0,1]; pure function of (pose, world).
Tensor render(const WorldSpec& world, const Pose& pose);
// Same, plus clamped Gaussian pixel noise when sigma > 0.
Tensor render_noisy(const WorldSpec& world, const Pose& pose, Rng& rng, float sigma);

// Euclidean position distance plus lambda_h * |wrapped heading difference|.
float spatial_distance(const Pose& a, const Pose& b, float lambda_h = 0.5f);

// Closed ball on position, wrapped tolerance on heading.
bool goal_check(const Pose& pose, const Pose& goal, float radius, float heading_tol);

// Ray distance from the pose to the boundary along heading + rel_angle.
float wall_distance(const WorldSpec& world, const Pose& pose, float rel_angle);

}  // namespace aifnav::env
