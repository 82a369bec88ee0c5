#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gated/layers.hpp"

namespace gated {

// Single-file binary checkpoint:
//   magic "GATEDCK1" | u32 version | u64 manifest length | manifest JSON |
//   float32 payload | u32 crc32(manifest + payload)
// The manifest names every tensor with shape and payload offset, and embeds
// the epoch, step and a config snapshot.
inline constexpr uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[9] = "GATEDCK1";

struct CheckpointMeta {
  int epoch = 0;
  int64_t step = 0;
  std::string config_json;  // verbatim snapshot
};

// Named auxiliary tensors (optimizer moments); saved alongside parameters.
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void save_checkpoint(const std::string& path, const ParamList& state, const CheckpointMeta& meta,
                     const NamedTensors& optimizer_state = {});

// Loads parameter values into `state` (names and shapes must match; throws
// ShapeError listing every offender). Returns meta; optimizer tensors are
// returned through `optimizer_state` when non-null.
CheckpointMeta load_checkpoint(const std::string& path, const ParamList& state,
                               NamedTensors* optimizer_state = nullptr);

// Reads just the meta block (no tensor copying, still checksum-verified).
CheckpointMeta peek_checkpoint(const std::string& path);

}  // namespace gated
