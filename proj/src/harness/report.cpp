#include "aifnav/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace aifnav::harness {

ResultsTable build_results_table(const std::vector<EpisodeSummary>& episodes) {
    ResultsTable t;
    for (const auto& e : episodes) {
        auto bump = [&](RateCell& c) {
            c.trials += 1;
            c.successes += e.success ? 1 : 0;
            c.collisions += e.collisions;
        };
        ResultsTable::Row& row = t.by_mode[e.mode];
        bump(row.overall);
        bump(e.exploration ? row.exp : row.noexp);
    }
    return t;
}

void results_write_csv(const ResultsTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "mode,category,trials,successes,success_pct,mean_collisions\n";
    for (const auto& [mode, row] : table.by_mode) {
        auto emit = [&](const char* cat, const RateCell& c) {
            if (c.trials == 0) return;  // absent, never 0/0
            out << mode << "," << cat << "," << c.trials << "," << c.successes << ","
                << c.rate_pct() << "," << c.mean_collisions() << "\n";
        };
        emit("overall", row.overall);
        emit("exploration", row.exp);
        emit("non_exploration", row.noexp);
    }
}

void efe_trace_write_csv(const planner::EpisodeLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "n,precision,chosen,epistemic,extrinsic,total,total_std,chosen_mean_abs_omega,"
           "median_mean_abs_omega\n";
    for (const auto& it : log.iterations) {
        const auto& c = it.candidates.at(it.chosen);
        double mean = 0;
        for (const auto& b : it.candidates) mean += b.total;
        mean /= it.candidates.size();
        double var = 0;
        for (const auto& b : it.candidates) var += (b.total - mean) * (b.total - mean);
        double sd = it.candidates.size() > 1 ? std::sqrt(var / (it.candidates.size() - 1)) : 0.0;
        std::vector<float> om = it.cand_mean_abs_omega;
        std::sort(om.begin(), om.end());
        float median = om.empty() ? 0.0f : om[om.size() / 2];
        out << it.n << "," << it.precision << "," << it.chosen << "," << c.epistemic << ","
            << c.extrinsic << "," << c.total << "," << sd << ","
            << it.cand_mean_abs_omega.at(it.chosen) << "," << median << "\n";
    }
}

}  // namespace aifnav::harness
