#pragma once

// Key-value configuration overrides.
//
//   # comment
//   network.hidden_width = 256
//   train.lr_initial = 1e-3
//   scoring.q = -0.5
//   sinkhorn.iterations = 5
//
// Keys are "<section>.<field>" with sections network, train, scoring and
// sinkhorn, and fields named as in the corresponding config structs.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mocap/permnet.hpp"
#include "mocap/sinkhorn.hpp"
#include "mocap/train.hpp"
#include "mocap/trajlabel.hpp"

namespace mocap {

struct RunConfig {
  NetworkConfig network;
  TrainConfig train;
  ScoringConfig scoring;
  SinkhornConfig sinkhorn;
};

/// Applies overrides in order. Throws ErrorKind::format for malformed lines,
/// unknown keys or unparsable values, naming the line.
void apply_config_text(std::string_view text, RunConfig& cfg);

RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Every recognised key.
std::vector<std::string> config_keys();

nlohmann::json to_json(const NetworkConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const ScoringConfig& cfg);
nlohmann::json to_json(const SinkhornConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace mocap
