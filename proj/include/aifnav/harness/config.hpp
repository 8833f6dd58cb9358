#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aifnav/envsim/env.hpp"
#include "aifnav/planner/efe.hpp"
#include "aifnav/planner/episode.hpp"
#include "aifnav/planner/features.hpp"
#include "aifnav/policy/diffusion.hpp"
#include "aifnav/worldmodel/mtrssm.hpp"
#include "aifnav/worldmodel/train.hpp"

namespace aifnav::harness {

// One start position with its two facing classes: toward an aliased wall
// (the "Exp" category, where disambiguation requires exploration) and toward
// the arena interior ("NoExp").
struct StartCase {
    float x = 0, y = 0;
    float exp_heading = 0;
    float noexp_heading = 0;
};

struct DatasetStanza {
    int n_sequences = 15;
    int seq_len = 2000;
    float dt = 0.2f;
    int holdout_sequences = 2;  // tail sequences reserved for evaluation
};

struct EvalStanza {
    std::vector<StartCase> starts;  // x 2 facings
    std::vector<env::Pose> goals;
    int trials = 2;
    int max_steps = 400;
    float goal_radius = 0.7f;
    float heading_tol = 1.0471975512f;  // 60 degrees
    std::vector<std::string> modes = {"full", "rssm", "only-extrinsic"};
};

// Artifact subdirectories, resolved against the --out directory.
struct PathsStanza {
    std::string dataset = "dataset";
    std::string worldmodel = "wm";
    std::string worldmodel_rssm = "wm_rssm";
    std::string policy = "policy";
    std::string features = "features";
    std::string imagine = "imagine";
    std::string episodes = "episodes";
    std::string report = "report";
};

struct ExperimentConfig {
    uint64_t seed = 0;
    env::WorldSpec world = env::WorldSpec::default_world();
    DatasetStanza dataset;
    wm::WmConfig worldmodel;
    wm::WmTrainConfig wm_train;
    policy::PolicyConfig policy;
    planner::FeatureTrainConfig features;
    planner::PlannerConfig planner;
    planner::PrecisionSchedule precision;
    EvalStanza eval;
    PathsStanza paths;
};

// Defaults matching the evaluation protocol: 3 starts x 2 facings x 3 goals
// x 2 trials in the default 8 x 8 arena.
ExperimentConfig default_config();

// Parses JSON and validates; any violation throws std::runtime_error with a
// message naming the offending field ("section.key: ...").
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

// Writes the full config (all defaults made explicit) as JSON.
void save_config(const ExperimentConfig& cfg, const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

// Structural checks shared by parse and by the pipeline entry points.
void validate_config(const ExperimentConfig& cfg);

planner::Mode mode_from_string(const std::string& s);  // throws on unknown
std::string mode_to_string(planner::Mode m);

}  // namespace aifnav::harness
