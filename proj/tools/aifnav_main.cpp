#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aifnav/harness/config.hpp"
#include "aifnav/harness/pipeline.hpp"

using namespace aifnav;

int main(int argc, char** argv) {
    CLI::App app{"Active-inference navigation experiments: data collection, model "
                 "training, imagination rollouts, evaluation, and reporting."};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool seed_given = false;
    std::string mode = "full";
    int workers = 1;
    std::string replay_name;

    app.add_option("--config", config_path, "experiment config JSON")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "artifact directory (default: out)");
    auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
    app.add_option("--mode", mode, "full | rssm | only-extrinsic")
        ->check(CLI::IsMember({"full", "rssm", "only-extrinsic"}));
    app.add_option("--workers", workers, "parallel episodes during eval")
        ->check(CLI::PositiveNumber);

    auto* collect = app.add_subcommand("collect", "record a wanderer dataset");
    auto* train_wm = app.add_subcommand("train-wm", "train the world model (--mode full|rssm)");
    auto* train_policy = app.add_subcommand("train-policy", "train the diffusion policy");
    auto* train_features = app.add_subcommand("train-features", "train the goal-feature encoder");
    auto* imagine = app.add_subcommand("imagine", "open-loop imagination report on held-out data");
    auto* eval_cmd = app.add_subcommand("eval", "run the navigation evaluation grid");
    auto* report = app.add_subcommand("report", "reduce episode logs to tables and plot data");
    auto* replay = app.add_subcommand("replay", "re-run one evaluated episode from its seed");
    replay->add_option("--name", replay_name, "ledger name of the episode")->required();

    CLI11_PARSE(app, argc, argv);
    seed_given = seed_opt->count() > 0;

    try {
        harness::ExperimentConfig cfg =
            config_path.empty() ? harness::default_config() : harness::load_config(config_path);
        if (seed_given) cfg.seed = seed;
        harness::validate_config(cfg);

        if (collect->parsed()) return harness::run_collect(cfg, out_dir);
        if (train_wm->parsed())
            return harness::run_train_wm(cfg, out_dir, harness::mode_from_string(mode));
        if (train_policy->parsed()) return harness::run_train_policy(cfg, out_dir);
        if (train_features->parsed()) return harness::run_train_features(cfg, out_dir);
        if (imagine->parsed())
            return harness::run_imagine(cfg, out_dir, harness::mode_from_string(mode));
        if (eval_cmd->parsed()) {
            std::vector<std::string> modes = cfg.eval.modes;
            if (app.get_option("--mode")->count() > 0) modes = {mode};
            return harness::run_eval(cfg, out_dir, modes, workers);
        }
        if (report->parsed()) return harness::run_report(cfg, out_dir);
        if (replay->parsed()) {
            std::string path = harness::replay_episode(cfg, out_dir, replay_name);
            std::cout << "replay: " << path << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
