#include "aifnav/harness/pipeline.hpp"

#include <atomic>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "aifnav/envsim/wanderer.hpp"
#include "aifnav/harness/pca.hpp"
#include "aifnav/harness/ppm.hpp"
#include "aifnav/harness/report.hpp"
#include "aifnav/worldmodel/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace aifnav::harness {

namespace {

constexpr int kImagineWarmup = 20;
constexpr int kImagineHorizon = 50;
constexpr int kTrajSteps = 500;  // filter length for state-trajectory dumps

std::string join(const std::string& a, const std::string& b) {
    return (fs::path(a) / b).string();
}

int missing(const std::string& what, const std::string& path, const std::string& hint) {
    std::cerr << "error: missing " << what << ": " << path << " (run `aifnav " << hint
              << "` first)\n";
    return 2;
}

bool dataset_exists(const std::string& dir) { return fs::exists(fs::path(dir) / "manifest.json"); }
bool checkpoint_exists(const std::string& dir) {
    return fs::exists(fs::path(dir) / "manifest.json") && fs::exists(fs::path(dir) / "params.f32");
}

// Training split: drops the config's holdout tail.
env::Dataset train_split(const env::Dataset& d, int holdout) {
    if (holdout <= 0) return d;
    env::Dataset t = d;
    int keep = d.n_sequences - holdout;
    if (keep < 1) throw std::runtime_error("dataset: holdout leaves no training sequences");
    t.n_sequences = keep;
    t.obs.resize(keep);
    t.act.resize(keep);
    t.pose.resize(keep);
    return t;
}

Tensor batched(const Tensor& chw) {
    Tensor out({1, chw.dim(0), chw.dim(1), chw.dim(2)});
    std::copy(chw.data(), chw.data() + chw.size(), out.data());
    return out;
}

Tensor batched_action(const env::Action& a) {
    Tensor t({1, 2});
    t[0] = a.v;
    t[1] = a.omega;
    return t;
}

float mse_between(const Tensor& a, const Tensor& b) {
    double acc = 0;
    for (int64_t i = 0; i < a.size(); ++i) {
        double d = double(a.data()[i]) - double(b.data()[i]);
        acc += d * d;
    }
    return float(acc / double(a.size()));
}

void write_loss_csv(const std::string& path, const std::vector<std::pair<int, float>>& rows,
                    const char* xname) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << xname << ",loss\n";
    for (const auto& [x, loss] : rows) f << x << "," << loss << "\n";
}

// Appends one row-vector per line: v[0],v[1],...
void append_row_csv(std::ofstream& f, const float* v, int n) {
    for (int i = 0; i < n; ++i) f << (i ? "," : "") << v[i] << "";
    f << "\n";
}

std::vector<std::vector<float>> read_rows_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::vector<std::vector<float>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<float> row;
        size_t pos = 0;
        while (pos <= line.size()) {
            size_t next = line.find(',', pos);
            if (next == std::string::npos) next = line.size();
            row.push_back(std::strtof(line.c_str() + pos, nullptr));
            pos = next + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string wm_dir_for(const ExperimentConfig& cfg, const std::string& out_dir,
                       planner::Mode mode) {
    return join(out_dir, mode == planner::Mode::kRssm ? cfg.paths.worldmodel_rssm
                                                      : cfg.paths.worldmodel);
}

}  // namespace

// ---------------------------------------------------------------------------
// f32 blobs

void write_f32(const Tensor& t, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(float));
}

std::vector<float> read_f32(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("cannot read " + path);
    auto bytes = size_t(f.tellg());
    f.seekg(0);
    std::vector<float> v(bytes / sizeof(float));
    f.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(float)));
    return v;
}

// ---------------------------------------------------------------------------
// SeedLedger

void SeedLedger::record(const std::string& name, uint64_t seed) {
    entries.emplace_back(name, seed);
}

bool SeedLedger::contains(const std::string& name) const {
    for (const auto& [n, s] : entries)
        if (n == name) return true;
    return false;
}

uint64_t SeedLedger::lookup(const std::string& name) const {
    for (const auto& [n, s] : entries)
        if (n == name) return s;
    throw std::runtime_error("seed ledger: no entry named " + name);
}

void SeedLedger::save(const std::string& path) const {
    json arr = json::array();
    for (const auto& [n, s] : entries) arr.push_back({{"name", n}, {"seed", s}});
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << arr.dump(2) << "\n";
}

SeedLedger SeedLedger::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("seed ledger: missing " + path);
    json arr = json::parse(f);
    SeedLedger l;
    for (const auto& e : arr)
        l.entries.emplace_back(e.at("name").get<std::string>(), e.at("seed").get<uint64_t>());
    return l;
}

// ---------------------------------------------------------------------------
// Subcommands

int run_collect(const ExperimentConfig& cfg, const std::string& out_dir) {
    const std::string dir = join(out_dir, cfg.paths.dataset);
    fs::create_directories(dir);
    env::Dataset d = env::wanderer_collect(cfg.world, cfg.seed, cfg.dataset.n_sequences,
                                           cfg.dataset.seq_len, cfg.dataset.dt);
    d.save(dir);
    std::cout << "collect: " << d.n_sequences << " sequences x " << d.seq_len << " steps -> "
              << dir << "\n";
    return 0;
}

int run_train_wm(const ExperimentConfig& cfg, const std::string& out_dir, planner::Mode mode) {
    const std::string data_dir = join(out_dir, cfg.paths.dataset);
    if (!dataset_exists(data_dir)) return missing("dataset", data_dir, "collect");
    env::Dataset data = train_split(env::Dataset::load(data_dir), cfg.dataset.holdout_sequences);

    wm::WmConfig mc = cfg.worldmodel;
    if (mode == planner::Mode::kRssm) mc.single_level = true;
    wm::WmTrainConfig tc = cfg.wm_train;
    tc.seed = Rng(cfg.seed).child(mc.single_level ? "train-wm-rssm" : "train-wm").seed();

    const std::string dir = wm_dir_for(cfg, out_dir, mode);
    fs::create_directories(dir);

    wm::WmTrainLog log;
    wm::Mtrssm model = wm::tbptt_train(data, mc, tc, &log, [](int epoch, float mean_total) {
        std::cout << "train-wm: epoch " << epoch << " mean loss " << mean_total << std::endl;
    });
    model.save(dir);

    {
        std::ofstream f(join(dir, "loss_windows.csv"));
        f << "window,total,recon,kl_low,kl_high,dl_pred\n";
        for (size_t i = 0; i < log.windows.size(); ++i) {
            const auto& p = log.windows[i];
            f << i << "," << p.total << "," << p.recon << "," << p.kl_low << "," << p.kl_high
              << "," << p.dl_pred << "\n";
        }
    }
    {
        std::vector<std::pair<int, float>> rows;
        for (size_t e = 0; e < log.epoch_total.size(); ++e)
            rows.emplace_back(int(e) + 1, log.epoch_total[e]);
        write_loss_csv(join(dir, "loss_epochs.csv"), rows, "epoch");
    }
    std::cout << "train-wm: saved " << dir << "\n";
    return 0;
}

int run_train_policy(const ExperimentConfig& cfg, const std::string& out_dir) {
    const std::string data_dir = join(out_dir, cfg.paths.dataset);
    if (!dataset_exists(data_dir)) return missing("dataset", data_dir, "collect");
    env::Dataset data = train_split(env::Dataset::load(data_dir), cfg.dataset.holdout_sequences);

    policy::PolicyConfig pc = cfg.policy;
    pc.v_max = cfg.world.v_max;
    pc.omega_max = cfg.world.omega_max;
    pc.seed = Rng(cfg.seed).child("train-policy").seed();

    std::vector<std::pair<int, float>> rows;
    policy::Policy pol = policy::train_policy(
        data, pc,
        [&rows](int step, float loss) {
            rows.emplace_back(step, loss);
            std::cout << "train-policy: step " << step << " loss " << loss << std::endl;
        },
        100);

    const std::string dir = join(out_dir, cfg.paths.policy);
    fs::create_directories(dir);
    pol.save(dir);
    write_loss_csv(join(dir, "loss.csv"), rows, "step");
    std::cout << "train-policy: saved " << dir << "\n";
    return 0;
}

int run_train_features(const ExperimentConfig& cfg, const std::string& out_dir) {
    const std::string data_dir = join(out_dir, cfg.paths.dataset);
    if (!dataset_exists(data_dir)) return missing("dataset", data_dir, "collect");
    env::Dataset data = train_split(env::Dataset::load(data_dir), cfg.dataset.holdout_sequences);

    planner::FeatureTrainConfig fc = cfg.features;
    fc.seed = Rng(cfg.seed).child("train-features").seed();

    std::vector<std::pair<int, float>> rows;
    planner::FeatureEncoder f = planner::train_features(
        data, cfg.world, fc,
        [&rows](int step, float loss) {
            rows.emplace_back(step, loss);
            std::cout << "train-features: step " << step << " loss " << loss << std::endl;
        },
        100);

    const std::string dir = join(out_dir, cfg.paths.features);
    fs::create_directories(dir);
    f.save(dir);
    write_loss_csv(join(dir, "loss.csv"), rows, "step");
    std::cout << "train-features: saved " << dir << "\n";
    return 0;
}

int run_imagine(const ExperimentConfig& cfg, const std::string& out_dir, planner::Mode mode) {
    const std::string data_dir = join(out_dir, cfg.paths.dataset);
    if (!dataset_exists(data_dir)) return missing("dataset", data_dir, "collect");
    const std::string model_dir = wm_dir_for(cfg, out_dir, mode);
    if (!checkpoint_exists(model_dir))
        return missing("world-model checkpoint", model_dir,
                       mode == planner::Mode::kRssm ? "train-wm --mode rssm" : "train-wm");

    env::Dataset data = env::Dataset::load(data_dir);
    wm::Mtrssm model = wm::Mtrssm::load(model_dir);

    // Evaluate on the holdout tail when one exists.
    const int seq = cfg.dataset.holdout_sequences > 0 ? data.n_sequences - 1 : 0;
    const int warmup = std::min(kImagineWarmup, data.seq_len - 2);
    const int horizon = std::min(kImagineHorizon, data.seq_len - warmup - 1);
    if (horizon < 1) return missing("long-enough dataset", data_dir, "collect");

    const std::string dir = join(out_dir, cfg.paths.imagine);
    fs::create_directories(dir);

    Rng root(Rng(cfg.seed).child("imagine").seed());

    // Warmup: posterior filtering over real observations.
    std::vector<Tensor> w_obs, w_act;
    for (int t = 0; t < warmup; ++t) {
        w_obs.push_back(batched(data.obs_at(seq, t)));
        w_act.push_back(batched_action(t > 0 ? data.act_at(seq, t) : env::Action{}));
    }
    Rng filt = root.child("filter");
    std::vector<wm::Latent> warm =
        wm::filter(model, w_obs, w_act, model.init_latent(1), filt);

    // Open loop: imagination driven by the logged actions.
    std::vector<Tensor> i_act;
    for (int t = warmup; t < warmup + horizon; ++t)
        i_act.push_back(batched_action(data.act_at(seq, t)));
    Rng im = root.child("rollout");
    wm::Imagination roll = wm::imagine(model, warm.back(), i_act, horizon, im);

    // Closed loop over the same span: filter with real observations, decode.
    std::vector<Tensor> c_obs, c_act;
    for (int t = warmup; t < warmup + horizon; ++t) {
        c_obs.push_back(batched(data.obs_at(seq, t)));
        c_act.push_back(batched_action(data.act_at(seq, t)));
    }
    Rng cf = root.child("closed");
    std::vector<wm::Latent> closed = wm::filter(model, c_obs, c_act, warm.back(), cf);

    std::ofstream mse(join(dir, "mse.csv"));
    mse << "t,open_loop_mse,closed_loop_mse\n";
    std::vector<Tensor> truth_frames, pred_frames;
    ag::NoGradGuard ng;
    double open_sum = 0, closed_sum = 0;
    for (int t = 0; t < horizon; ++t) {
        Tensor truth = data.obs_at(seq, warmup + t);
        Tensor pred({3, env::kObsH, env::kObsW});
        std::copy(roll.obs_pred[t].data(), roll.obs_pred[t].data() + pred.size(), pred.data());
        Tensor closed_img = model.decode(closed[t])->value;
        Tensor closed_chw({3, env::kObsH, env::kObsW});
        std::copy(closed_img.data(), closed_img.data() + closed_chw.size(), closed_chw.data());
        float mo = mse_between(pred, truth);
        float mc2 = mse_between(closed_chw, truth);
        open_sum += mo;
        closed_sum += mc2;
        mse << t << "," << mo << "," << mc2 << "\n";
        truth_frames.push_back(truth);
        pred_frames.push_back(pred);
        write_f32(pred, join(dir, "pred_" + std::to_string(t) + ".f32"));
        write_f32(truth, join(dir, "truth_" + std::to_string(t) + ".f32"));
    }
    mse << "mean," << open_sum / horizon << "," << closed_sum / horizon << "\n";
    write_ppm(contact_sheet(truth_frames, 10), join(dir, "truth_sheet.ppm"));
    write_ppm(contact_sheet(pred_frames, 10), join(dir, "pred_sheet.ppm"));

    // State-trajectory dumps for PCA: a long posterior pass over the same
    // sequence, one d_h / d_l row per step, plus image features when a
    // feature checkpoint is available.
    const int traj = std::min(kTrajSteps, data.seq_len);
    std::ofstream dh(join(dir, "traj_d_h.csv")), dl(join(dir, "traj_d_l.csv"));
    std::ofstream posef(join(dir, "traj_pose.csv"));
    posef << "x,y,heading\n";
    const std::string feat_dir = join(out_dir, cfg.paths.features);
    const bool have_feats = checkpoint_exists(feat_dir);
    planner::FeatureEncoder fenc;
    std::ofstream featf;
    if (have_feats) {
        fenc = planner::FeatureEncoder::load(feat_dir);
        featf.open(join(dir, "traj_feat.csv"));
    }
    Rng tf = root.child("traj");
    wm::Latent cur = model.init_latent(1);
    for (int t = 0; t < traj; ++t) {
        Tensor o = batched(data.obs_at(seq, t));
        Tensor a = batched_action(t > 0 ? data.act_at(seq, t) : env::Action{});
        cur = model.posterior_step(cur, ag::constant(a), model.encode_obs(ag::constant(o)), tf);
        if (!model.cfg.single_level)
            append_row_csv(dh, cur.d_h->value.data(), model.cfg.d_h);
        append_row_csv(dl, cur.d_l->value.data(), model.cfg.d_l);
        env::Pose p = data.pose_at(seq, t);
        float pv[3] = {p.x, p.y, p.heading};
        append_row_csv(posef, pv, 3);
        if (have_feats) {
            Tensor fv = fenc.encode(o);
            append_row_csv(featf, fv.data(), planner::FeatureEncoder::kFeatDim);
        }
    }
    std::cout << "imagine: open-loop mean MSE " << open_sum / horizon << ", closed-loop "
              << closed_sum / horizon << " -> " << dir << "\n";
    return 0;
}

std::vector<EvalJob> eval_grid(const ExperimentConfig& cfg, const std::vector<std::string>& modes,
                               uint64_t root_seed, const std::string& out_dir) {
    Rng root(root_seed);
    std::vector<EvalJob> jobs;
    for (const auto& mode : modes) {
        int case_idx = 0;
        for (const auto& sc : cfg.eval.starts) {
            for (int facing = 0; facing < 2; ++facing) {
                for (const auto& goal : cfg.eval.goals) {
                    for (int trial = 0; trial < cfg.eval.trials; ++trial) {
                        EvalJob j;
                        char buf[32];
                        std::snprintf(buf, sizeof buf, "case%02d/trial%d", case_idx, trial);
                        j.name = "eval/" + mode + "/" + buf;
                        j.mode = mode;
                        j.category = facing == 0 ? "Exp" : "NoExp";
                        j.start = {sc.x, sc.y, facing == 0 ? sc.exp_heading : sc.noexp_heading};
                        j.goal = goal;
                        j.seed = root.child(j.name).seed();
                        std::snprintf(buf, sizeof buf, "case%02d_trial%d", case_idx, trial);
                        j.log_path = join(join(join(out_dir, cfg.paths.episodes), mode),
                                          std::string(buf) + ".jsonl");
                        jobs.push_back(std::move(j));
                    }
                    ++case_idx;
                }
            }
        }
    }
    return jobs;
}

namespace {

struct EvalAssets {
    policy::Policy pol;
    planner::FeatureEncoder features;
    wm::Mtrssm wm_full;
    wm::Mtrssm wm_rssm;
    bool have_full = false, have_rssm = false;
};

int run_one_episode(const ExperimentConfig& cfg, const EvalAssets& assets, const EvalJob& job) {
    planner::PlannerConfig pc = cfg.planner;
    pc.mode = mode_from_string(job.mode);
    const wm::Mtrssm& model =
        pc.mode == planner::Mode::kRssm ? assets.wm_rssm : assets.wm_full;
    planner::EpisodeLimits limits;
    limits.max_steps = cfg.eval.max_steps;
    limits.goal_radius = cfg.eval.goal_radius;
    limits.heading_tol = cfg.eval.heading_tol;
    limits.dt = cfg.dataset.dt;
    planner::EpisodeLog log =
        planner::run_episode(cfg.world, job.start, job.goal, assets.pol, model, assets.features,
                             pc, cfg.precision, limits, job.seed);
    fs::create_directories(fs::path(job.log_path).parent_path());
    log.save_jsonl(job.log_path);
    return log.success ? 1 : 0;
}

}  // namespace

int run_eval(const ExperimentConfig& cfg, const std::string& out_dir,
             const std::vector<std::string>& modes, int workers) {
    const std::string policy_dir = join(out_dir, cfg.paths.policy);
    const std::string feat_dir = join(out_dir, cfg.paths.features);
    if (!checkpoint_exists(policy_dir)) return missing("policy checkpoint", policy_dir, "train-policy");
    if (!checkpoint_exists(feat_dir))
        return missing("feature checkpoint", feat_dir, "train-features");

    bool want_full = false, want_rssm = false;
    for (const auto& m : modes) {
        planner::Mode md = mode_from_string(m);
        (md == planner::Mode::kRssm ? want_rssm : want_full) = true;
    }
    EvalAssets assets;
    if (want_full) {
        const std::string dir = wm_dir_for(cfg, out_dir, planner::Mode::kFull);
        if (!checkpoint_exists(dir)) return missing("world-model checkpoint", dir, "train-wm");
        assets.wm_full = wm::Mtrssm::load(dir);
        assets.have_full = true;
    }
    if (want_rssm) {
        const std::string dir = wm_dir_for(cfg, out_dir, planner::Mode::kRssm);
        if (!checkpoint_exists(dir))
            return missing("single-level world-model checkpoint", dir, "train-wm --mode rssm");
        assets.wm_rssm = wm::Mtrssm::load(dir);
        assets.have_rssm = true;
    }
    assets.pol = policy::Policy::load(policy_dir);
    assets.features = planner::FeatureEncoder::load(feat_dir);

    std::vector<EvalJob> jobs = eval_grid(cfg, modes, cfg.seed, out_dir);
    const std::string epi_dir = join(out_dir, cfg.paths.episodes);
    fs::create_directories(epi_dir);

    SeedLedger ledger;
    json index = json::array();
    for (const auto& j : jobs) {
        ledger.record(j.name, j.seed);
        index.push_back({{"name", j.name},
                         {"mode", j.mode},
                         {"category", j.category},
                         {"seed", j.seed},
                         {"path", j.log_path},
                         {"start", {{"x", j.start.x}, {"y", j.start.y}, {"heading", j.start.heading}}},
                         {"goal", {{"x", j.goal.x}, {"y", j.goal.y}, {"heading", j.goal.heading}}}});
    }
    ledger.save(join(epi_dir, "seeds.json"));
    {
        std::ofstream f(join(epi_dir, "index.json"));
        f << index.dump(2) << "\n";
    }

    std::atomic<size_t> next{0};
    std::atomic<int> successes{0};
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= jobs.size() || failed.load()) return;
            try {
                successes += run_one_episode(cfg, assets, jobs[i]);
                std::cout << "eval: " << jobs[i].name << " done\n";
            } catch (const std::exception& e) {
                std::cerr << "eval: " << jobs[i].name << " failed: " << e.what() << "\n";
                failed = true;
            }
        }
    };
    int n_workers = std::max(1, workers);
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) return 1;
    std::cout << "eval: " << successes.load() << "/" << jobs.size() << " episodes succeeded -> "
              << epi_dir << "\n";
    return 0;
}

std::string replay_episode(const ExperimentConfig& cfg, const std::string& out_dir,
                           const std::string& name) {
    const std::string epi_dir = join(out_dir, cfg.paths.episodes);
    SeedLedger ledger = SeedLedger::load(join(epi_dir, "seeds.json"));
    std::ifstream idx(join(epi_dir, "index.json"));
    if (!idx) throw std::runtime_error("replay: missing " + join(epi_dir, "index.json"));
    json index = json::parse(idx);

    for (const auto& e : index) {
        if (e.at("name").get<std::string>() != name) continue;
        EvalJob job;
        job.name = name;
        job.mode = e.at("mode").get<std::string>();
        job.category = e.at("category").get<std::string>();
        job.seed = ledger.lookup(name);
        job.start = {e.at("start").at("x").get<float>(), e.at("start").at("y").get<float>(),
                     e.at("start").at("heading").get<float>()};
        job.goal = {e.at("goal").at("x").get<float>(), e.at("goal").at("y").get<float>(),
                    e.at("goal").at("heading").get<float>()};
        job.log_path = join(join(epi_dir, "replay"), fs::path(e.at("path").get<std::string>())
                                                          .filename().string());

        EvalAssets assets;
        assets.pol = policy::Policy::load(join(out_dir, cfg.paths.policy));
        assets.features = planner::FeatureEncoder::load(join(out_dir, cfg.paths.features));
        planner::Mode md = mode_from_string(job.mode);
        if (md == planner::Mode::kRssm)
            assets.wm_rssm = wm::Mtrssm::load(wm_dir_for(cfg, out_dir, md));
        else
            assets.wm_full = wm::Mtrssm::load(wm_dir_for(cfg, out_dir, md));
        run_one_episode(cfg, assets, job);
        return job.log_path;
    }
    throw std::runtime_error("replay: no episode named " + name);
}

int run_report(const ExperimentConfig& cfg, const std::string& out_dir) {
    const std::string epi_dir = join(out_dir, cfg.paths.episodes);
    const std::string idx_path = join(epi_dir, "index.json");
    if (!fs::exists(idx_path)) return missing("episode index", idx_path, "eval");
    std::ifstream idx(idx_path);
    json index = json::parse(idx);

    const std::string dir = join(out_dir, cfg.paths.report);
    fs::create_directories(dir);

    std::vector<EpisodeSummary> summaries;
    std::map<std::string, planner::EpisodeLog> first_per_mode;
    std::ofstream div(join(dir, "diversity.csv"));
    div << "mode,episode,iterations,mean_abs_omega_spread\n";
    for (const auto& e : index) {
        const std::string path = e.at("path").get<std::string>();
        if (!fs::exists(path)) return missing("episode log", path, "eval");
        planner::EpisodeLog log = planner::EpisodeLog::load_jsonl(path);
        EpisodeSummary s;
        s.mode = e.at("mode").get<std::string>();
        s.exploration = e.at("category").get<std::string>() == "Exp";
        s.success = log.success;
        s.collisions = log.collisions;
        summaries.push_back(s);
        // Candidate diversity: per-iteration spread (max - min) of the
        // candidates' mean |omega|, averaged over the episode.
        double spread = 0;
        for (const auto& it : log.iterations) {
            if (it.cand_mean_abs_omega.empty()) continue;
            auto [lo, hi] = std::minmax_element(it.cand_mean_abs_omega.begin(),
                                                it.cand_mean_abs_omega.end());
            spread += double(*hi - *lo);
        }
        if (!log.iterations.empty()) spread /= double(log.iterations.size());
        div << s.mode << "," << e.at("name").get<std::string>() << "," << log.iterations.size()
            << "," << spread << "\n";
        if (!first_per_mode.count(s.mode) && !log.iterations.empty())
            first_per_mode.emplace(s.mode, std::move(log));
    }

    results_write_csv(build_results_table(summaries), join(dir, "results.csv"));
    for (const auto& [mode, log] : first_per_mode)
        efe_trace_write_csv(log, join(dir, "efe_trace_" + mode + ".csv"));

    // PCA exports of the state trajectories dumped by `imagine`.
    const std::string im_dir = join(out_dir, cfg.paths.imagine);
    for (const char* fam : {"d_h", "d_l", "feat"}) {
        const std::string src = join(im_dir, std::string("traj_") + fam + ".csv");
        if (!fs::exists(src)) continue;
        auto rows = read_rows_csv(src);
        if (rows.size() < 3) continue;
        PcaResult pca = pca_project(rows, 3);
        if (pca.degenerate)
            std::cerr << "report: " << fam << " trajectory is rank-deficient; emitting "
                      << pca.components << " components\n";
        pca_write_csv(pca, join(dir, std::string("pca_") + fam + ".csv"));
    }
    std::cout << "report: " << summaries.size() << " episodes -> " << dir << "\n";
    return 0;
}

}  // namespace aifnav::harness
