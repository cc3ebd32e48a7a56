#pragma once

// Architecture description. Plain data, validated once before any build.

#include <cstddef>
#include <string>
#include <vector>

#include "nnkit/common.hpp"

namespace nnkit {

enum class LayerKind { Conv, Relu, MaxPool2, Flatten, Dense, GlobalAvgPool, AttentionNoop };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string &name);

struct LayerSpec {
  LayerKind kind;
  std::string name;
  // Conv
  std::size_t out_ch = 0, ksize = 0, stride = 1, pad = 0;
  // Dense
  std::size_t in_features = 0, out_features = 0;

  bool operator==(const LayerSpec &) const = default;
};

/// Crop rectangle on the input image plus its fusion weight.
struct FaRegion {
  std::size_t row = 0, col = 0, h = 0, w = 0;
  double lambda = 0.0;

  bool operator==(const FaRegion &) const = default;
};

/// Feature-fusion block replacing the first convolution: auxiliary branch
/// convolutions run on image crops and are added into the matching window of
/// the main feature map, scaled by lambda.
struct FaConfig {
  bool enabled = false;
  std::size_t branch_ksize = 3;
  std::vector<FaRegion> regions;

  bool operator==(const FaConfig &) const = default;
};

struct NetworkSpec {
  std::size_t in_ch = 1, in_h = 16, in_w = 16;
  std::size_t num_classes = 5;
  FaConfig fa;
  std::vector<LayerSpec> layers;

  bool operator==(const NetworkSpec &) const = default;

  /// Throws ConfigError unless consecutive layer shapes compose, the head
  /// emits num_classes logits, and the FA geometry tiles exactly.
  void validate() const;

  /// Shape after each layer; index 0 is the input shape.
  std::vector<std::vector<std::size_t>> shape_chain() const;

  std::size_t parameter_count() const;
};

/// Three-stage convolutional backbone with a dense head. `size` must be a
/// multiple of 8 (three 2x2 pools). FA defaults to three regions: upper-left
/// quarter, upper-right quarter, lower-central half, lambda 0.3 each.
NetworkSpec minicnn_spec(std::size_t size = 16, std::size_t num_classes = 5,
                         std::size_t c1 = 8, std::size_t c2 = 16, std::size_t c3 = 32,
                         std::size_t hidden = 64, bool with_fa = true);

FaConfig default_fa_regions(std::size_t h, std::size_t w, double lambda = 0.3);

} // namespace nnkit
