#include "aifnav/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace aifnav::harness {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw std::runtime_error("config: " + field + ": " + why);
}

// Reads j[key] into out when present, with a field-level message on type or
// range problems. `section` gives the dotted prefix for messages.
void read_f(const json& j, const std::string& section, const char* key, float& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) fail(section + "." + key, "expected a number");
    out = j[key].get<float>();
    if (!std::isfinite(out)) fail(section + "." + key, "must be finite");
}

void read_d(const json& j, const std::string& section, const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) fail(section + "." + key, "expected a number");
    out = j[key].get<double>();
    if (!std::isfinite(out)) fail(section + "." + key, "must be finite");
}

void read_i(const json& j, const std::string& section, const char* key, int& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) fail(section + "." + key, "expected an integer");
    out = j[key].get<int>();
}

void read_u64(const json& j, const std::string& section, const char* key, uint64_t& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_unsigned() && !j[key].is_number_integer())
        fail(section + "." + key, "expected a non-negative integer");
    if (j[key].is_number_integer() && j[key].get<int64_t>() < 0)
        fail(section + "." + key, "expected a non-negative integer");
    out = j[key].get<uint64_t>();
}

void read_b(const json& j, const std::string& section, const char* key, bool& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_boolean()) fail(section + "." + key, "expected a boolean");
    out = j[key].get<bool>();
}

void read_s(const json& j, const std::string& section, const char* key, std::string& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) fail(section + "." + key, "expected a string");
    out = j[key].get<std::string>();
}

const json& section_of(const json& root, const char* name) {
    static const json empty = json::object();
    if (!root.contains(name)) return empty;
    if (!root[name].is_object()) fail(name, "expected an object");
    return root[name];
}

env::Pose pose_from(const json& j, const std::string& field) {
    if (!j.is_object()) fail(field, "expected an object with x, y, heading");
    env::Pose p;
    read_f(j, field, "x", p.x);
    read_f(j, field, "y", p.y);
    read_f(j, field, "heading", p.heading);
    return p;
}

json pose_to(const env::Pose& p) {
    return json{{"x", p.x}, {"y", p.y}, {"heading", p.heading}};
}

}  // namespace

ExperimentConfig default_config() {
    ExperimentConfig c;
    // Planning knobs sized for CPU evaluation.
    c.planner.M = 3;
    c.planner.N = 3;
    c.planner.n_candidates = 6;
    c.planner.plan_horizon = 8;
    // 3 start positions, each with an aliased-wall facing ("Exp") and an
    // interior facing ("NoExp"); walls 0 (south), 1 (east), 2 (north) carry
    // the aliased texture in the default world.
    const float pi = 3.14159265358979f;
    c.eval.starts = {
        {2.0f, 2.0f, -pi / 2, pi / 4},
        {6.0f, 2.0f, 0.0f, 3 * pi / 4},
        {6.0f, 6.0f, pi / 2, -3 * pi / 4},
    };
    c.eval.goals = {
        {1.5f, 6.5f, pi / 2},
        {6.5f, 4.0f, 0.0f},
        {4.0f, 1.5f, -pi / 2},
    };
    return c;
}

void validate_config(const ExperimentConfig& c) {
    if (c.world.width <= 0 || c.world.height <= 0) fail("world.width/height", "must be positive");
    if (c.world.robot_radius <= 0) fail("world.robot_radius", "must be positive");
    if (c.world.v_max <= 0) fail("world.v_max", "must be positive");
    if (c.world.omega_max <= 0) fail("world.omega_max", "must be positive");
    if (c.dataset.n_sequences < 1) fail("dataset.n_sequences", "must be >= 1");
    if (c.dataset.seq_len < 2) fail("dataset.seq_len", "must be >= 2");
    if (c.dataset.dt <= 0) fail("dataset.dt", "must be positive");
    if (c.dataset.holdout_sequences < 0) fail("dataset.holdout_sequences", "must be >= 0");
    if (c.dataset.holdout_sequences >= c.dataset.n_sequences)
        fail("dataset.holdout_sequences", "must leave at least one training sequence");
    if (c.worldmodel.d_h < 1 || c.worldmodel.d_l < 1)
        fail("worldmodel.d_h/d_l", "must be >= 1");
    if (c.worldmodel.tau_h < 1 || c.worldmodel.tau_l < 1)
        fail("worldmodel.tau_h/tau_l", "must be >= 1");
    if (c.wm_train.window < 2) fail("worldmodel.window", "must be >= 2");
    if (c.wm_train.batch < 1) fail("worldmodel.batch", "must be >= 1");
    if (c.wm_train.epochs < 1) fail("worldmodel.epochs", "must be >= 1");
    if (c.policy.T_F < 1) fail("policy.T_F", "must be >= 1");
    if (c.policy.T_a < 1 || c.policy.T_a > c.policy.T_F)
        fail("policy.T_a", "must be in [1, T_F]");
    if (c.policy.K_train < 1) fail("policy.K_train", "must be >= 1");
    if (c.policy.K_sample < 1 || c.policy.K_sample > c.policy.K_train)
        fail("policy.K_sample", "must be in [1, K_train]");
    if (c.features.steps < 1) fail("features.steps", "must be >= 1");
    if (c.features.batch < 2) fail("features.batch", "must be >= 2");
    if (c.planner.M < 1) fail("planner.M", "must be >= 1");
    if (c.planner.N < 1) fail("planner.N", "must be >= 1");
    if (c.planner.n_candidates < 1) fail("planner.n_candidates", "must be >= 1");
    if (c.planner.plan_horizon < 0) fail("planner.plan_horizon", "must be >= 0");
    if (c.precision.floor < 0) fail("planner.precision_floor", "must be >= 0");
    if (c.precision.ceiling < c.precision.floor)
        fail("planner.precision_ceiling", "must be >= precision_floor");
    if (c.eval.starts.empty()) fail("eval.starts", "must list at least one start");
    if (c.eval.goals.empty()) fail("eval.goals", "must list at least one goal");
    if (c.eval.trials < 1) fail("eval.trials", "must be >= 1");
    if (c.eval.max_steps < 1) fail("eval.max_steps", "must be >= 1");
    if (c.eval.goal_radius <= 0) fail("eval.goal_radius", "must be positive");
    if (c.eval.modes.empty()) fail("eval.modes", "must list at least one mode");
    for (const auto& m : c.eval.modes) mode_from_string(m);  // throws on unknown
    auto in_arena = [&](float x, float y) {
        return x >= c.world.robot_radius && x <= c.world.width - c.world.robot_radius &&
               y >= c.world.robot_radius && y <= c.world.height - c.world.robot_radius;
    };
    for (size_t i = 0; i < c.eval.starts.size(); ++i)
        if (!in_arena(c.eval.starts[i].x, c.eval.starts[i].y))
            fail("eval.starts[" + std::to_string(i) + "]", "outside the reachable arena");
    for (size_t i = 0; i < c.eval.goals.size(); ++i)
        if (!in_arena(c.eval.goals[i].x, c.eval.goals[i].y))
            fail("eval.goals[" + std::to_string(i) + "]", "outside the reachable arena");
}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: not valid JSON: ") + e.what());
    }
    if (!root.is_object()) fail("(root)", "expected a JSON object");

    ExperimentConfig c = default_config();
    read_u64(root, "(root)", "seed", c.seed);

    {
        const json& j = section_of(root, "world");
        read_f(j, "world", "width", c.world.width);
        read_f(j, "world", "height", c.world.height);
        read_f(j, "world", "robot_radius", c.world.robot_radius);
        read_f(j, "world", "v_max", c.world.v_max);
        read_f(j, "world", "omega_max", c.world.omega_max);
        read_f(j, "world", "obs_noise_sigma", c.world.obs_noise_sigma);
    }
    {
        const json& j = section_of(root, "dataset");
        read_i(j, "dataset", "n_sequences", c.dataset.n_sequences);
        read_i(j, "dataset", "seq_len", c.dataset.seq_len);
        read_f(j, "dataset", "dt", c.dataset.dt);
        read_i(j, "dataset", "holdout_sequences", c.dataset.holdout_sequences);
    }
    {
        const json& j = section_of(root, "worldmodel");
        read_i(j, "worldmodel", "d_h", c.worldmodel.d_h);
        read_i(j, "worldmodel", "d_l", c.worldmodel.d_l);
        read_i(j, "worldmodel", "sh_vars", c.worldmodel.sh_vars);
        read_i(j, "worldmodel", "sh_classes", c.worldmodel.sh_classes);
        read_i(j, "worldmodel", "sl_vars", c.worldmodel.sl_vars);
        read_i(j, "worldmodel", "sl_classes", c.worldmodel.sl_classes);
        read_f(j, "worldmodel", "tau_h", c.worldmodel.tau_h);
        read_f(j, "worldmodel", "tau_l", c.worldmodel.tau_l);
        read_f(j, "worldmodel", "beta", c.worldmodel.beta);
        read_f(j, "worldmodel", "free_bits", c.worldmodel.free_bits);
        read_i(j, "worldmodel", "embed", c.worldmodel.embed);
        read_i(j, "worldmodel", "head_hidden", c.worldmodel.head_hidden);
        read_i(j, "worldmodel", "window", c.wm_train.window);
        read_i(j, "worldmodel", "batch", c.wm_train.batch);
        read_i(j, "worldmodel", "epochs", c.wm_train.epochs);
        read_f(j, "worldmodel", "lr", c.wm_train.lr);
        read_i(j, "worldmodel", "max_steps_per_seq", c.wm_train.max_steps_per_seq);
    }
    {
        const json& j = section_of(root, "policy");
        read_i(j, "policy", "T_F", c.policy.T_F);
        read_i(j, "policy", "T_a", c.policy.T_a);
        read_i(j, "policy", "K_train", c.policy.K_train);
        read_i(j, "policy", "K_sample", c.policy.K_sample);
        read_s(j, "policy", "schedule_kind", c.policy.schedule_kind);
        read_f(j, "policy", "lr", c.policy.lr);
        read_i(j, "policy", "batch", c.policy.batch);
        read_i(j, "policy", "steps", c.policy.steps);
    }
    {
        const json& j = section_of(root, "features");
        read_i(j, "features", "steps", c.features.steps);
        read_i(j, "features", "batch", c.features.batch);
        read_f(j, "features", "lr", c.features.lr);
        read_f(j, "features", "near_radius", c.features.near_radius);
    }
    {
        const json& j = section_of(root, "planner");
        read_i(j, "planner", "M", c.planner.M);
        read_i(j, "planner", "N", c.planner.N);
        read_i(j, "planner", "n_candidates", c.planner.n_candidates);
        read_i(j, "planner", "plan_horizon", c.planner.plan_horizon);
        read_d(j, "planner", "precision_floor", c.precision.floor);
        read_d(j, "planner", "precision_ceiling", c.precision.ceiling);
        read_d(j, "planner", "precision_slope", c.precision.slope);
        read_d(j, "planner", "precision_midpoint", c.precision.midpoint);
    }
    {
        const json& j = section_of(root, "eval");
        if (j.contains("starts")) {
            if (!j["starts"].is_array()) fail("eval.starts", "expected an array");
            c.eval.starts.clear();
            for (size_t i = 0; i < j["starts"].size(); ++i) {
                const std::string field = "eval.starts[" + std::to_string(i) + "]";
                const json& s = j["starts"][i];
                if (!s.is_object()) fail(field, "expected an object");
                StartCase sc;
                read_f(s, field, "x", sc.x);
                read_f(s, field, "y", sc.y);
                read_f(s, field, "exp_heading", sc.exp_heading);
                read_f(s, field, "noexp_heading", sc.noexp_heading);
                c.eval.starts.push_back(sc);
            }
        }
        if (j.contains("goals")) {
            if (!j["goals"].is_array()) fail("eval.goals", "expected an array");
            c.eval.goals.clear();
            for (size_t i = 0; i < j["goals"].size(); ++i)
                c.eval.goals.push_back(
                    pose_from(j["goals"][i], "eval.goals[" + std::to_string(i) + "]"));
        }
        read_i(j, "eval", "trials", c.eval.trials);
        read_i(j, "eval", "max_steps", c.eval.max_steps);
        read_f(j, "eval", "goal_radius", c.eval.goal_radius);
        read_f(j, "eval", "heading_tol", c.eval.heading_tol);
        if (j.contains("modes")) {
            if (!j["modes"].is_array()) fail("eval.modes", "expected an array of strings");
            c.eval.modes.clear();
            for (const auto& m : j["modes"]) {
                if (!m.is_string()) fail("eval.modes", "expected an array of strings");
                c.eval.modes.push_back(m.get<std::string>());
            }
        }
    }
    {
        const json& j = section_of(root, "paths");
        read_s(j, "paths", "dataset", c.paths.dataset);
        read_s(j, "paths", "worldmodel", c.paths.worldmodel);
        read_s(j, "paths", "worldmodel_rssm", c.paths.worldmodel_rssm);
        read_s(j, "paths", "policy", c.paths.policy);
        read_s(j, "paths", "features", c.paths.features);
        read_s(j, "paths", "imagine", c.paths.imagine);
        read_s(j, "paths", "episodes", c.paths.episodes);
        read_s(j, "paths", "report", c.paths.report);
    }

    validate_config(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    json root;
    root["seed"] = c.seed;
    root["world"] = {{"width", c.world.width},
                     {"height", c.world.height},
                     {"robot_radius", c.world.robot_radius},
                     {"v_max", c.world.v_max},
                     {"omega_max", c.world.omega_max},
                     {"obs_noise_sigma", c.world.obs_noise_sigma}};
    root["dataset"] = {{"n_sequences", c.dataset.n_sequences},
                       {"seq_len", c.dataset.seq_len},
                       {"dt", c.dataset.dt},
                       {"holdout_sequences", c.dataset.holdout_sequences}};
    root["worldmodel"] = {{"d_h", c.worldmodel.d_h},
                          {"d_l", c.worldmodel.d_l},
                          {"sh_vars", c.worldmodel.sh_vars},
                          {"sh_classes", c.worldmodel.sh_classes},
                          {"sl_vars", c.worldmodel.sl_vars},
                          {"sl_classes", c.worldmodel.sl_classes},
                          {"tau_h", c.worldmodel.tau_h},
                          {"tau_l", c.worldmodel.tau_l},
                          {"beta", c.worldmodel.beta},
                          {"free_bits", c.worldmodel.free_bits},
                          {"embed", c.worldmodel.embed},
                          {"head_hidden", c.worldmodel.head_hidden},
                          {"window", c.wm_train.window},
                          {"batch", c.wm_train.batch},
                          {"epochs", c.wm_train.epochs},
                          {"lr", c.wm_train.lr},
                          {"max_steps_per_seq", c.wm_train.max_steps_per_seq}};
    root["policy"] = {{"T_F", c.policy.T_F},
                      {"T_a", c.policy.T_a},
                      {"K_train", c.policy.K_train},
                      {"K_sample", c.policy.K_sample},
                      {"schedule_kind", c.policy.schedule_kind},
                      {"lr", c.policy.lr},
                      {"batch", c.policy.batch},
                      {"steps", c.policy.steps}};
    root["features"] = {{"steps", c.features.steps},
                        {"batch", c.features.batch},
                        {"lr", c.features.lr},
                        {"near_radius", c.features.near_radius}};
    root["planner"] = {{"M", c.planner.M},
                       {"N", c.planner.N},
                       {"n_candidates", c.planner.n_candidates},
                       {"plan_horizon", c.planner.plan_horizon},
                       {"precision_floor", c.precision.floor},
                       {"precision_ceiling", c.precision.ceiling},
                       {"precision_slope", c.precision.slope},
                       {"precision_midpoint", c.precision.midpoint}};
    json starts = json::array();
    for (const auto& s : c.eval.starts)
        starts.push_back({{"x", s.x},
                          {"y", s.y},
                          {"exp_heading", s.exp_heading},
                          {"noexp_heading", s.noexp_heading}});
    json goals = json::array();
    for (const auto& g : c.eval.goals) goals.push_back(pose_to(g));
    root["eval"] = {{"starts", starts},
                    {"goals", goals},
                    {"trials", c.eval.trials},
                    {"max_steps", c.eval.max_steps},
                    {"goal_radius", c.eval.goal_radius},
                    {"heading_tol", c.eval.heading_tol},
                    {"modes", c.eval.modes}};
    root["paths"] = {{"dataset", c.paths.dataset},
                     {"worldmodel", c.paths.worldmodel},
                     {"worldmodel_rssm", c.paths.worldmodel_rssm},
                     {"policy", c.paths.policy},
                     {"features", c.paths.features},
                     {"imagine", c.paths.imagine},
                     {"episodes", c.paths.episodes},
                     {"report", c.paths.report}};
    return root.dump(2) + "\n";
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path);
    out << config_to_json(cfg);
}

planner::Mode mode_from_string(const std::string& s) {
    if (s == "full") return planner::Mode::kFull;
    if (s == "rssm") return planner::Mode::kRssm;
    if (s == "only-extrinsic") return planner::Mode::kOnlyExtrinsic;
    throw std::runtime_error("config: unknown mode '" + s +
                             "' (expected full, rssm, or only-extrinsic)");
}

std::string mode_to_string(planner::Mode m) {
    switch (m) {
        case planner::Mode::kFull: return "full";
        case planner::Mode::kRssm: return "rssm";
        default: return "only-extrinsic";
    }
}

}  // namespace aifnav::harness
