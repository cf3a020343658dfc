#pragma once

// Binary model file:
//   "FFM1" | u32 LE metadata length | UTF-8 JSON metadata | f32 LE tensors
// Tensors follow the order and shapes listed in metadata["tensors"].

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fishforge/network.hpp"
#include "fishforge/train.hpp"

namespace fishforge {

struct CheckpointMeta {
  std::string mode = "joint";
  std::uint64_t seed = 0;
  int epoch = 0;
  std::string preset = "heavy";
  std::string optimizer = "adam";
  LossConfig loss;
  int patch_size = 64;
  std::uint64_t split_seed = 0;
};

struct Checkpoint {
  CheckpointMeta meta;
  Network net;
};

/// Metadata filled from a finished training run.
CheckpointMeta make_meta(const TrainConfig& config, int epochs_run,
                         int patch_size, std::uint64_t split_seed);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws IoError on a bad magic, truncated data or shape mismatch.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fishforge
