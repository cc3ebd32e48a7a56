#pragma once

// Checkpoint file: 8-byte magic, u32 version, u32 header length, UTF-8 header
// (spec text, training metadata, tensor manifest with blob offsets), then the
// parameter blob as little-endian f32. Round-trips are bit-exact.

#include <string>

#include "nnkit/model.hpp"

namespace nnkit {

void save_checkpoint(const NetworkState &state, const std::string &path);

/// Validates magic, version, manifest/spec consistency; rejects NaN weights.
NetworkState load_checkpoint(const std::string &path);

/// Header text only (for inspection without parsing floats).
std::string checkpoint_header(const std::string &path);

} // namespace nnkit
