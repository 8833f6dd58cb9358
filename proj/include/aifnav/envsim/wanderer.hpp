#pragma once

#include "aifnav/envsim/dataset.hpp"

namespace aifnav::env {

// Scripted data-collection policy: waypoint cruising with wall-probe evasive
// turns and occasional in-place spins. Deterministic for a fixed seed.
Dataset wanderer_collect(const WorldSpec& world, uint64_t seed, int n_sequences, int seq_len,
                         float dt);

// Fraction of cells of a grid_n x grid_n occupancy grid visited by one
// sequence's poses.
float coverage_fraction(const Dataset& d, int seq, const WorldSpec& world, int grid_n = 8);

}  // namespace aifnav::env
