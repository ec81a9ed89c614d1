#pragma once

// GAECKPT1 checkpoint files:
//   "GAECKPT1" | u64 metadata length | metadata (JSON text)
//   | u, v, w as row-major float32 | u64 rng length | rng state text
// All integers little-endian 64-bit, floats little-endian IEEE-754.

#include <filesystem>
#include <string>

#include "gae/train.hpp"

namespace gae {

struct Checkpoint {
  TrainConfig train;
  TrainState state;

  const GaeConfig& model() const { return state.params.config; }
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Serialized image of a checkpoint (what save_checkpoint writes).
std::vector<unsigned char> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes, const std::string& source);

/// The metadata document embedded in the file, pretty-printed.
std::string checkpoint_metadata(const Checkpoint& checkpoint);

}  // namespace gae
