#pragma once

// Checkpoint container: magic, JSON header, raw float64 tensors.
//
//   bytes 0..7    "MOCAPNET"
//   bytes 8..11   header length L, uint32 little-endian
//   next L bytes  JSON header (version, config, sinkhorn, training, tensors)
//   remainder     tensors as little-endian float64, row-major, in header order

#include <filesystem>
#include <string>
#include <string_view>

#include "mocap/permnet.hpp"
#include "mocap/sinkhorn.hpp"
#include "mocap/train.hpp"

namespace mocap {

inline constexpr int kCheckpointVersion = 1;

struct ModelCheckpoint {
  int version = kCheckpointVersion;
  Network network;
  SinkhornConfig sinkhorn;
  TrainingMeta meta;

  const NetworkConfig& config() const noexcept { return network.config(); }
};

std::string serialize_checkpoint(const ModelCheckpoint& checkpoint);

/// Throws ErrorKind::format for a malformed container and
/// ErrorKind::version for a version or tensor-shape mismatch.
ModelCheckpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mocap
