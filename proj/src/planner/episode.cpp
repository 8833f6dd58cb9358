#include "aifnav/planner/episode.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace aifnav::planner {

using nlohmann::json;

namespace {

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::kFull: return "full";
        case Mode::kRssm: return "rssm";
        case Mode::kOnlyExtrinsic: return "only_extrinsic";
    }
    return "full";
}

Tensor batched(const Tensor& single) {
    std::vector<int> sh{1};
    for (int d : single.shape()) sh.push_back(d);
    Tensor out(sh);
    std::copy(single.data(), single.data() + single.size(), out.data());
    return out;
}

json pose_json(const env::Pose& p) { return json{{"x", p.x}, {"y", p.y}, {"heading", p.heading}}; }

env::Pose pose_from(const json& j) {
    return env::Pose{j.at("x").get<float>(), j.at("y").get<float>(), j.at("heading").get<float>()};
}

}  // namespace

void EpisodeLog::save_jsonl(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write episode log: " + path);
    out << json{{"record", "header"},
                {"seed", seed},
                {"mode", mode},
                {"start", pose_json(start)},
                {"goal", pose_json(goal)}}
        << "\n";
    for (const auto& it : iterations) {
        json cands = json::array();
        for (size_t c = 0; c < it.candidates.size(); ++c) {
            const EfeBreakdown& b = it.candidates[c];
            cands.push_back(json{{"epistemic", b.epistemic},
                                 {"extrinsic", b.extrinsic},
                                 {"total", b.total},
                                 {"mean_abs_omega", it.cand_mean_abs_omega[c]}});
        }
        out << json{{"record", "iteration"},
                    {"n", it.n},
                    {"precision", it.precision},
                    {"candidates", cands},
                    {"chosen", it.chosen}}
            << "\n";
    }
    for (const auto& s : step_records)
        out << json{{"record", "step"},
                    {"pose", pose_json(s.pose)},
                    {"action", {{"v", s.action.v}, {"omega", s.action.omega}}},
                    {"collided", s.collided}}
            << "\n";
    out << json{{"record", "summary"},
                {"success", success},
                {"steps", steps},
                {"collisions", collisions}}
        << "\n";
}

EpisodeLog EpisodeLog::load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read episode log: " + path);
    EpisodeLog log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        const std::string kind = j.at("record");
        if (kind == "header") {
            log.seed = j.at("seed").get<uint64_t>();
            log.mode = j.at("mode");
            log.start = pose_from(j.at("start"));
            log.goal = pose_from(j.at("goal"));
        } else if (kind == "iteration") {
            IterationRecord it;
            it.n = j.at("n");
            it.precision = j.at("precision");
            it.chosen = j.at("chosen");
            for (const auto& c : j.at("candidates")) {
                EfeBreakdown b;
                b.epistemic = c.at("epistemic");
                b.extrinsic = c.at("extrinsic");
                b.total = c.at("total");
                b.precision = it.precision;
                it.candidates.push_back(b);
                it.cand_mean_abs_omega.push_back(c.at("mean_abs_omega").get<float>());
            }
            log.iterations.push_back(std::move(it));
        } else if (kind == "step") {
            StepRecord s;
            s.pose = pose_from(j.at("pose"));
            s.action = env::Action{j.at("action").at("v").get<float>(),
                                   j.at("action").at("omega").get<float>()};
            s.collided = j.at("collided");
            log.step_records.push_back(s);
        } else if (kind == "summary") {
            log.success = j.at("success");
            log.steps = j.at("steps");
            log.collisions = j.at("collisions");
        }
    }
    return log;
}

EpisodeLog run_episode(const env::WorldSpec& world, const env::Pose& start,
                       const env::Pose& goal, const policy::Policy& pol,
                       const wm::Mtrssm& model, const FeatureEncoder& features,
                       const PlannerConfig& cfg, const PrecisionSchedule& sched,
                       const EpisodeLimits& limits, uint64_t seed) {
    if (limits.goal_radius <= 0.0f)
        throw std::invalid_argument("run_episode: goal radius must be positive");
    const float margin = world.robot_radius;
    if (goal.x < margin || goal.x > world.width - margin || goal.y < margin ||
        goal.y > world.height - margin)
        throw std::invalid_argument("run_episode: goal pose outside the reachable arena");
    if (cfg.mode == Mode::kRssm && !model.cfg.single_level)
        throw std::invalid_argument("run_episode: rssm mode needs a single-level model");

    EpisodeLog log;
    log.seed = seed;
    log.mode = mode_name(cfg.mode);
    log.start = start;
    log.goal = goal;

    Rng root(seed);
    Rng filter_rng = root.child("filter");

    const Tensor goal_feat = features.encode(env::render(world, goal));

    env::Pose pose = start;
    Tensor o_now = env::render(world, pose);
    Tensor o_prev = o_now;

    ag::NoGradGuard ng;
    wm::Latent z = model.init_latent(1);
    z = model.posterior_step(z, ag::constant(Tensor::zeros({1, 2})),
                             model.encode_obs(ag::constant(batched(o_now))), filter_rng);

    if (env::goal_check(pose, goal, limits.goal_radius, limits.heading_tol)) {
        log.success = true;
        return log;
    }

    const int H = pol.cfg.horizon();
    const int T_a = pol.cfg.T_a;
    int n = 0;
    while (log.steps < limits.max_steps) {
        Tensor obs_pair = policy::make_obs_pair(o_prev, o_now);
        Rng cand_rng = root.child("candidates", n);
        Tensor cands = policy::ddim_sample(pol, obs_pair, cfg.n_candidates, pol.cfg.K_sample,
                                           cand_rng);  // [n_cand, 2, H]

        const float precision = float(sched(n));
        IterationRecord rec;
        rec.n = n;
        rec.precision = precision;
        for (int c = 0; c < cfg.n_candidates; ++c) {
            Tensor cand({2, H});
            std::copy(cands.data() + int64_t(c) * 2 * H, cands.data() + int64_t(c + 1) * 2 * H,
                      cand.data());
            Rng efe_rng = root.child("efe", uint64_t(n) * cfg.n_candidates + c);
            rec.candidates.push_back(
                efe_evaluate(model, features, cand, z, goal_feat, cfg, precision, efe_rng));
            float mo = 0;
            for (int t = 1; t <= T_a; ++t) mo += std::abs(cand[H + t]);
            rec.cand_mean_abs_omega.push_back(mo / T_a);
        }
        rec.chosen = select_action(rec.candidates);
        log.iterations.push_back(rec);

        bool done = false;
        for (int t = 1; t <= T_a && log.steps < limits.max_steps; ++t) {
            const int64_t base = int64_t(rec.chosen) * 2 * H;
            env::Action a = env::Action::clamped(world, cands[base + t], cands[base + H + t]);
            env::StepResult sr = env::step(world, pose, a, limits.dt);
            pose = sr.pose;
            log.collisions += sr.collided ? 1 : 0;
            log.steps += 1;
            log.step_records.push_back(StepRecord{pose, a, sr.collided});

            o_prev = o_now;
            o_now = env::render(world, pose);
            Tensor av({1, 2});
            av[0] = a.v;
            av[1] = a.omega;
            z = model.posterior_step(z, ag::constant(av),
                                     model.encode_obs(ag::constant(batched(o_now))), filter_rng);

            if (env::goal_check(pose, goal, limits.goal_radius, limits.heading_tol)) {
                log.success = true;
                done = true;
                break;
            }
        }
        if (done) break;
        ++n;
    }
    return log;
}

}  // namespace aifnav::planner
