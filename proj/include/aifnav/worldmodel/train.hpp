#pragma once

#include <functional>

#include "aifnav/envsim/dataset.hpp"
#include "aifnav/worldmodel/mtrssm.hpp"

namespace aifnav::wm {

struct WmTrainConfig {
    int window = 50;   // TBPTT window length
    int batch = 5;     // sequences trained in parallel
    int epochs = 10;
    float lr = 1e-3f;
    uint64_t seed = 0;
    int max_steps_per_seq = 0;  // 0 = full sequences; otherwise first N steps
};

struct WmTrainLog {
    std::vector<WmLossParts> windows;   // one entry per window per epoch
    std::vector<float> epoch_total;     // mean window total per epoch
    int skipped_steps = 0;              // optimizer steps rejected (non-finite)
};

// Truncated backpropagation through time: gradients flow within each window;
// integrator states and sampled latents carry across windows detached.
Mtrssm tbptt_train(const env::Dataset& data, const WmConfig& mc, const WmTrainConfig& tc,
                   WmTrainLog* log = nullptr,
                   const std::function<void(int epoch, float mean_total)>& progress = nullptr);

}  // namespace aifnav::wm
