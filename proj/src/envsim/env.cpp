#include "aifnav/envsim/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace aifnav::env {

namespace {
constexpr float kPi = 3.14159265358979323846f;

struct Rgb {
    float r, g, b;
};

constexpr Rgb kFloor{0.32f, 0.28f, 0.24f};
constexpr Rgb kCeiling{0.88f, 0.89f, 0.92f};
constexpr Rgb kWallBase{0.58f, 0.54f, 0.47f};
constexpr Rgb kWallPlain{0.66f, 0.63f, 0.55f};
constexpr Rgb kChairDark{0.13f, 0.13f, 0.16f};
constexpr Rgb kChairSeat{0.22f, 0.21f, 0.25f};

// Repeating "chair row" texture, identical on every aliased wall. u is the
// counterclockwise coordinate along the wall, vfrac in [0,1) from wall top.
Rgb aliased_texture(float u, float vfrac) {
    float s = u - std::floor(u);  // 1-unit period
    // chair silhouette: backrest band and a seat block, separated by gaps
    if (s >= 0.15f && s < 0.85f) {
        if (vfrac >= 0.25f && vfrac < 0.55f && s >= 0.3f && s < 0.7f) return kChairDark;   // backrest
        if (vfrac >= 0.55f && vfrac < 0.75f) return kChairSeat;                            // seat
        if (vfrac >= 0.75f && (s < 0.35f || s >= 0.65f)) return kChairDark;                // legs
    }
    return kWallBase;
}

Rgb wall_color(const WorldSpec& w, int wall, float u, float vfrac,
               const std::vector<std::pair<float, const Landmark*>>& wall_marks) {
    for (const auto& [lu, lm] : wall_marks) {
        if (std::abs(u - lu) < lm->size && vfrac >= 0.45f)
            return Rgb{lm->r, lm->g, lm->b};
    }
    if (w.wall_texture[wall] == kTexAliased) return aliased_texture(u, vfrac);
    return kWallPlain;
}

// Wall id of the closest wall to a point.
int nearest_wall(const WorldSpec& w, float x, float y) {
    float d[4] = {y, w.width - x, w.height - y, x};
    return static_cast<int>(std::min_element(d, d + 4) - d);
}

float wall_u(const WorldSpec& w, int wall, float x, float y) {
    switch (wall) {
        case 0: return x;
        case 1: return y;
        case 2: return w.width - x;
        default: return w.height - y;
    }
}

}  // namespace

WorldSpec WorldSpec::default_world() {
    WorldSpec w;
    // Four colored stools along the west (plain) wall: red, red, black, green.
    w.landmarks = {
        {0.05f, 1.3f, 0.85f, 0.10f, 0.10f, 0.35f},
        {0.05f, 3.1f, 0.85f, 0.10f, 0.10f, 0.35f},
        {0.05f, 4.9f, 0.08f, 0.08f, 0.08f, 0.35f},
        {0.05f, 6.7f, 0.10f, 0.75f, 0.15f, 0.35f},
    };
    return w;
}

uint64_t WorldSpec::hash() const {
    auto mix = [](uint64_t h, uint64_t v) { return splitmix64(h ^ splitmix64(v)); };
    auto f2u = [](float f) {
        uint32_t u;
        std::memcpy(&u, &f, 4);
        return static_cast<uint64_t>(u);
    };
    uint64_t h = 0x9d5c0f2ae1b3ULL;
    for (float f : {width, height, robot_radius, v_max, omega_max, obs_noise_sigma}) h = mix(h, f2u(f));
    for (int t : wall_texture) h = mix(h, static_cast<uint64_t>(t));
    for (const auto& lm : landmarks)
        for (float f : {lm.x, lm.y, lm.r, lm.g, lm.b, lm.size}) h = mix(h, f2u(f));
    return h;
}

Action Action::clamped(const WorldSpec& w, float v, float omega) {
    Action a;
    a.v = std::clamp(v, 0.0f, w.v_max);
    a.omega = std::clamp(omega, -w.omega_max, w.omega_max);
    return a;
}

float wrap_angle(float a) {
    a = std::fmod(a + kPi, 2.0f * kPi);
    if (a < 0.0f) a += 2.0f * kPi;
    return a - kPi;
}

StepResult step(const WorldSpec& world, const Pose& pose, const Action& a, float dt) {
    if (dt <= 0.0f) throw std::invalid_argument("step: dt must be positive");
    StepResult out;
    float nx = pose.x + a.v * std::cos(pose.heading) * dt;
    float ny = pose.y + a.v * std::sin(pose.heading) * dt;
    const float r = world.robot_radius;
    float cx = std::clamp(nx, r, world.width - r);
    float cy = std::clamp(ny, r, world.height - r);
    out.collided = (cx != nx) || (cy != ny);
    out.pose = Pose{cx, cy, wrap_angle(pose.heading + a.omega * dt)};
    return out;
}

float wall_distance(const WorldSpec& world, const Pose& pose, float rel_angle) {
    float phi = pose.heading + rel_angle;
    float dx = std::cos(phi), dy = std::sin(phi);
    float best = std::numeric_limits<float>::max();
    if (dx > 1e-9f) best = std::min(best, (world.width - pose.x) / dx);
    if (dx < -1e-9f) best = std::min(best, (0.0f - pose.x) / dx);
    if (dy > 1e-9f) best = std::min(best, (world.height - pose.y) / dy);
    if (dy < -1e-9f) best = std::min(best, (0.0f - pose.y) / dy);
    return best;
}

Tensor render(const WorldSpec& world, const Pose& pose) {
    Tensor img({kObsC, kObsH, kObsW});

    // Landmarks projected onto their nearest wall once per render.
    std::vector<std::pair<float, const Landmark*>> marks[4];
    for (const auto& lm : world.landmarks) {
        int wall = nearest_wall(world, lm.x, lm.y);
        marks[wall].emplace_back(wall_u(world, wall, lm.x, lm.y), &lm);
    }

    auto put = [&img](int row, int col, Rgb c) {
        img[(0 * kObsH + row) * kObsW + col] = c.r;
        img[(1 * kObsH + row) * kObsW + col] = c.g;
        img[(2 * kObsH + row) * kObsW + col] = c.b;
    };

    for (int col = 0; col < kNumRays; ++col) {
        // column 0 is the leftmost ray
        float rel = kFov * (0.5f - (col + 0.5f) / kNumRays);
        float phi = pose.heading + rel;
        float dx = std::cos(phi), dy = std::sin(phi);

        // hit against the four boundary walls
        float t_best = std::numeric_limits<float>::max();
        int wall = 0;
        auto consider = [&](float t, int w) {
            if (t > 1e-6f && t < t_best) {
                t_best = t;
                wall = w;
            }
        };
        if (dy < 0.0f) consider((0.0f - pose.y) / dy, 0);
        if (dx > 0.0f) consider((world.width - pose.x) / dx, 1);
        if (dy > 0.0f) consider((world.height - pose.y) / dy, 2);
        if (dx < 0.0f) consider((0.0f - pose.x) / dx, 3);

        float hx = pose.x + dx * t_best, hy = pose.y + dy * t_best;
        float u = wall_u(world, wall, hx, hy);
        float d_perp = t_best * std::cos(rel);  // removes fisheye distortion

        int h = std::min(kObsH, std::max(2, static_cast<int>(std::round(kObsH * 0.9f / d_perp))));
        int top = (kObsH - h) / 2;
        for (int row = 0; row < kObsH; ++row) {
            if (row < top)
                put(row, col, kCeiling);
            else if (row >= top + h)
                put(row, col, kFloor);
            else {
                float vfrac = (row - top + 0.5f) / h;
                put(row, col, wall_color(world, wall, u, vfrac, marks[wall]));
            }
        }
    }
    return img;
}

Tensor render_noisy(const WorldSpec& world, const Pose& pose, Rng& rng, float sigma) {
    Tensor img = render(world, pose);
    if (sigma > 0.0f)
        for (int64_t i = 0; i < img.size(); ++i)
            img[i] = std::clamp(img[i] + rng.normal(0.0f, sigma), 0.0f, 1.0f);
    return img;
}

float spatial_distance(const Pose& a, const Pose& b, float lambda_h) {
    float dx = a.x - b.x, dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy) + lambda_h * std::abs(wrap_angle(a.heading - b.heading));
}

bool goal_check(const Pose& pose, const Pose& goal, float radius, float heading_tol) {
    if (radius <= 0.0f) throw std::invalid_argument("goal_check: radius must be positive");
    float dx = pose.x - goal.x, dy = pose.y - goal.y;
    return std::sqrt(dx * dx + dy * dy) <= radius &&
           std::abs(wrap_angle(pose.heading - goal.heading)) <= heading_tol;
}

}  // namespace aifnav::env
