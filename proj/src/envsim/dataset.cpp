#include "aifnav/envsim/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace aifnav::env {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string seq_name(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%03d.f32", prefix, i);
    return buf;
}

void write_f32(const fs::path& p, const std::vector<float>& v) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("dataset: cannot write " + p.string());
    f.write(reinterpret_cast<const char*>(v.data()), static_cast<int64_t>(v.size()) * 4);
}

std::vector<float> read_f32(const fs::path& p, int64_t count) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("dataset: missing " + p.string());
    std::vector<float> v(static_cast<size_t>(count));
    f.read(reinterpret_cast<char*>(v.data()), count * 4);
    if (!f) throw std::runtime_error("dataset: truncated " + p.string());
    return v;
}

}  // namespace

void Dataset::action_stats(float mean[2], float stddev[2]) const {
    double sum[2] = {0, 0}, sq[2] = {0, 0};
    int64_t n = 0;
    for (const auto& seq : act)
        for (size_t i = 0; i + 1 < seq.size(); i += 2) {
            for (int d = 0; d < 2; ++d) {
                sum[d] += seq[i + d];
                sq[d] += static_cast<double>(seq[i + d]) * seq[i + d];
            }
            ++n;
        }
    for (int d = 0; d < 2; ++d) {
        mean[d] = static_cast<float>(sum[d] / n);
        double var = sq[d] / n - static_cast<double>(mean[d]) * mean[d];
        stddev[d] = static_cast<float>(std::sqrt(std::max(var, 1e-8)));
    }
}

void Dataset::save(const std::string& dir) const {
    fs::create_directories(dir);
    json m;
    m["dt"] = dt;
    m["seq_len"] = seq_len;
    m["n_sequences"] = n_sequences;
    m["obs_shape"] = {kObsC, kObsH, kObsW};
    m["action_dim"] = 2;
    m["seed"] = seed;
    m["world_hash"] = world_hash;
    std::ofstream mf(fs::path(dir) / "manifest.json");
    mf << m.dump(2) << "\n";
    for (int i = 0; i < n_sequences; ++i) {
        write_f32(fs::path(dir) / seq_name("obs", i), obs[i]);
        write_f32(fs::path(dir) / seq_name("act", i), act[i]);
        write_f32(fs::path(dir) / seq_name("pose", i), pose[i]);
    }
}

Dataset Dataset::load(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw std::runtime_error("dataset: missing " + dir + "/manifest.json");
    json m = json::parse(mf);
    Dataset d;
    d.dt = m.at("dt").get<float>();
    d.seq_len = m.at("seq_len").get<int>();
    d.n_sequences = m.at("n_sequences").get<int>();
    d.seed = m.at("seed").get<uint64_t>();
    d.world_hash = m.at("world_hash").get<uint64_t>();
    const int64_t obs_n = static_cast<int64_t>(d.seq_len) * kObsC * kObsH * kObsW;
    for (int i = 0; i < d.n_sequences; ++i) {
        d.obs.push_back(read_f32(fs::path(dir) / seq_name("obs", i), obs_n));
        d.act.push_back(read_f32(fs::path(dir) / seq_name("act", i), d.seq_len * 2LL));
        d.pose.push_back(read_f32(fs::path(dir) / seq_name("pose", i), d.seq_len * 3LL));
    }
    return d;
}

}  // namespace aifnav::env
