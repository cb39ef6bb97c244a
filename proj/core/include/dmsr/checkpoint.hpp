#pragma once

#include <memory>
#include <string>

#include "dmsr/diffusion.hpp"

namespace dmsr {

/// Checkpoint layout: magic "DMSR", u16 format version, config key-value
/// block, sorted tokenizer vocabulary, parameter manifest (path, shape,
/// byte offset), then raw little-endian float32 payloads. Loading rebuilds
/// the model from the stored config and validates every shape.
void save_checkpoint(const DiffusionModel& model, const std::string& path,
                     long epochs_completed = 0);

struct LoadedCheckpoint {
  std::unique_ptr<DiffusionModel> model;
  long epochs_completed = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// FNV-1a 64-bit hash of a file's bytes, hex encoded.
std::string file_hash(const std::string& path);

}  // namespace dmsr
