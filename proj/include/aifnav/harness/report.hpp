#pragma once

#include <map>
#include <string>
#include <vector>

#include "aifnav/planner/episode.hpp"

namespace aifnav::harness {

struct EpisodeSummary {
    std::string mode;
    bool exploration = false;  // aliased-wall facing start ("Exp" class)
    bool success = false;
    int collisions = 0;
};

struct RateCell {
    int trials = 0;
    int successes = 0;
    long long collisions = 0;

    double rate_pct() const { return trials ? 100.0 * successes / trials : 0.0; }
    double mean_collisions() const { return trials ? double(collisions) / trials : 0.0; }
};

// Per-mode success rates and collision means, split by exploration class.
struct ResultsTable {
    struct Row {
        RateCell overall, exp, noexp;
    };
    std::map<std::string, Row> by_mode;
};

ResultsTable build_results_table(const std::vector<EpisodeSummary>& episodes);

// CSV rows: mode, category, trials, successes, success_pct, mean_collisions.
// Empty categories are omitted rather than rendered as 0/0.
void results_write_csv(const ResultsTable& table, const std::string& path);

// Per-iteration EFE trace of one episode: n, precision, chosen candidate's
// epistemic/extrinsic/total, and the across-candidate std of totals.
void efe_trace_write_csv(const planner::EpisodeLog& log, const std::string& path);

}  // namespace aifnav::harness
