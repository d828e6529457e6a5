#pragma once

#include <string>

#include "swinoir/model.hpp"

namespace swinoir {

// Checkpoint container, format version 1:
//   bytes 0..7   magic "SOIRCKPT"
//   bytes 8..11  u32 version (little-endian)
//   bytes 12..19 u64 header length
//   header       JSON: model config plus an ordered tensor directory
//                (name, shape) for every parameter
//   payload      raw little-endian doubles, tensors in directory order
// Parameter bytes are stored verbatim, so save -> load -> forward is
// bitwise identical to the source model.
void save_checkpoint(const SwinOirModel& model, const std::string& path);
SwinOirModel load_checkpoint(const std::string& path);

// FNV-1a hash of the file contents, as a hex string; identifies a checkpoint
// in reports.
std::string checkpoint_digest(const std::string& path);

}  // namespace swinoir
