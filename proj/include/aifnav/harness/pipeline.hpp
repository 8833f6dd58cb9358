#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aifnav/harness/config.hpp"

namespace aifnav::harness {

// Append-only record of every named rng stream a run hands out, serialized
// next to the artifacts so any episode can be replayed bit-for-bit.
struct SeedLedger {
    std::vector<std::pair<std::string, uint64_t>> entries;

    void record(const std::string& name, uint64_t seed);
    uint64_t lookup(const std::string& name) const;  // throws if absent
    bool contains(const std::string& name) const;

    void save(const std::string& path) const;
    static SeedLedger load(const std::string& path);
};

// One scheduled evaluation episode (the grid is starts x facings x goals x
// trials, per mode).
struct EvalJob {
    std::string name;  // ledger key, e.g. "eval/full/case04/trial1"
    std::string mode;
    std::string category;  // "Exp" or "NoExp"
    env::Pose start, goal;
    uint64_t seed = 0;
    std::string log_path;
};

// Expands the config's evaluation grid for the given modes. Seeds are the
// named children of root_seed, so the list doubles as the ledger.
std::vector<EvalJob> eval_grid(const ExperimentConfig& cfg, const std::vector<std::string>& modes,
                               uint64_t root_seed, const std::string& out_dir);

// Subcommand bodies. Each returns a process exit code and reports missing
// inputs on stderr with the exact path that was expected.
int run_collect(const ExperimentConfig& cfg, const std::string& out_dir);
int run_train_wm(const ExperimentConfig& cfg, const std::string& out_dir, planner::Mode mode);
int run_train_policy(const ExperimentConfig& cfg, const std::string& out_dir);
int run_train_features(const ExperimentConfig& cfg, const std::string& out_dir);
int run_imagine(const ExperimentConfig& cfg, const std::string& out_dir, planner::Mode mode);
int run_eval(const ExperimentConfig& cfg, const std::string& out_dir,
             const std::vector<std::string>& modes, int workers);
int run_report(const ExperimentConfig& cfg, const std::string& out_dir);

// Re-runs one evaluated episode from the saved ledger and index; returns the
// path of the replayed log. Used for reproducibility audits.
std::string replay_episode(const ExperimentConfig& cfg, const std::string& out_dir,
                           const std::string& name);

// Raw little-endian float32 blob I/O for tensor dumps.
void write_f32(const Tensor& t, const std::string& path);
std::vector<float> read_f32(const std::string& path);

}  // namespace aifnav::harness
