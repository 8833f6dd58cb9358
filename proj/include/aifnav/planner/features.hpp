#pragma once

#include <functional>
#include <string>

#include "aifnav/diffcore/nn.hpp"
#include "aifnav/envsim/dataset.hpp"

namespace aifnav::planner {

// Goal-feature network: maps an observation to a 64-vector whose pairwise
// Euclidean distances are trained to track normalized spatial distance.
struct FeatureEncoder {
    static constexpr int kFeatDim = 64;

    ag::ParamSet params;
    ag::Conv2d c1, c2, c3;
    ag::Linear fc1, fc2, fc3;

    FeatureEncoder() = default;
    explicit FeatureEncoder(uint64_t seed);

    ag::Var forward(const ag::Var& obs) const;  // [B,3,24,32] -> [B,64]
    Tensor encode(const Tensor& obs) const;     // no-grad convenience

    void save(const std::string& dir) const;
    static FeatureEncoder load(const std::string& dir);
};

// Distance targets are spatial_distance / max possible value in the arena
// (diagonal plus the heading term's ceiling), keeping them in [0, 1].
float max_spatial_distance(const env::WorldSpec& world, float lambda_h = 0.5f);

// Squared feature distance between two encoded observations.
float feature_distance2(const Tensor& fa, const Tensor& fb);

struct FeatureTrainConfig {
    int steps = 1500;
    int batch = 16;
    float lr = 1e-3f;
    float near_radius = 2.0f;  // half of each batch is drawn within this
    uint64_t seed = 0;
};

// Trains ||f(o_a) - f(o_b)|| toward normalized spatial distance over pose
// pairs from the dataset; half of each batch is a near pair, half uniform.
FeatureEncoder train_features(const env::Dataset& data, const env::WorldSpec& world,
                              const FeatureTrainConfig& cfg,
                              const std::function<void(int step, float loss)>& progress = nullptr,
                              int report_every = 100);

}  // namespace aifnav::planner
