#include "aifnav/diffcore/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace aifnav::ag {

namespace fs = std::filesystem;
using nlohmann::json;

void save_checkpoint(const std::string& dir, const std::vector<Var>& params, const json& meta) {
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "aifnav-checkpoint-v1";
    manifest["meta"] = meta;
    json plist = json::array();
    int64_t offset = 0;
    std::ofstream blob(fs::path(dir) / "params.f32", std::ios::binary);
    if (!blob) throw std::runtime_error("save_checkpoint: cannot write " + dir + "/params.f32");
    for (const auto& p : params) {
        plist.push_back({{"name", p->name}, {"shape", p->value.shape()}, {"offset", offset}});
        blob.write(reinterpret_cast<const char*>(p->value.data()), p->value.size() * sizeof(float));
        offset += p->value.size() * static_cast<int64_t>(sizeof(float));
    }
    manifest["params"] = plist;
    std::ofstream mf(fs::path(dir) / "manifest.json");
    mf << manifest.dump(2) << "\n";
}

std::map<std::string, Tensor> load_checkpoint(const std::string& dir, json* meta) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw std::runtime_error("load_checkpoint: missing " + dir + "/manifest.json");
    json manifest = json::parse(mf);
    if (meta) *meta = manifest.value("meta", json::object());

    std::ifstream blob(fs::path(dir) / "params.f32", std::ios::binary);
    if (!blob) throw std::runtime_error("load_checkpoint: missing " + dir + "/params.f32");

    std::map<std::string, Tensor> out;
    for (const auto& entry : manifest["params"]) {
        std::vector<int> shape = entry["shape"].get<std::vector<int>>();
        int64_t offset = entry["offset"].get<int64_t>();
        Tensor t(shape);
        blob.seekg(offset);
        blob.read(reinterpret_cast<char*>(t.data()), t.size() * sizeof(float));
        if (!blob) throw std::runtime_error("load_checkpoint: truncated blob in " + dir);
        out[entry["name"].get<std::string>()] = t;
    }
    return out;
}

void load_into(const std::string& dir, const std::vector<Var>& params, json* meta) {
    auto loaded = load_checkpoint(dir, meta);
    for (const auto& p : params) {
        auto it = loaded.find(p->name);
        if (it == loaded.end())
            throw std::runtime_error("load_into: checkpoint " + dir + " has no parameter '" + p->name + "'");
        if (it->second.shape() != p->value.shape())
            throw std::runtime_error("load_into: shape mismatch for '" + p->name + "': " +
                                     Tensor::shape_str(it->second.shape()) + " vs " +
                                     Tensor::shape_str(p->value.shape()));
        std::copy(it->second.data(), it->second.data() + it->second.size(), p->value.data());
    }
}

}  // namespace aifnav::ag
