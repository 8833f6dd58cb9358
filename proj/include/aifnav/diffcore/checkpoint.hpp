#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "aifnav/diffcore/autodiff.hpp"

namespace aifnav::ag {

// Checkpoint = manifest.json (names, shapes, byte offsets, plus free-form
// metadata) + params.f32, one flat little-endian float32 blob.
void save_checkpoint(const std::string& dir, const std::vector<Var>& params,
                     const nlohmann::json& meta = nlohmann::json::object());

std::map<std::string, Tensor> load_checkpoint(const std::string& dir, nlohmann::json* meta = nullptr);

// Loads by name into existing parameters; shape mismatches and missing names
// are errors.
void load_into(const std::string& dir, const std::vector<Var>& params, nlohmann::json* meta = nullptr);

}  // namespace aifnav::ag
