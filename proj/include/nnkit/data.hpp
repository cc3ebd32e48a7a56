#pragma once

// Dataset container, synthetic pattern generator, and the binary dataset
// file format (little-endian, u8 pixels, u16 labels).

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nnkit/tensor.hpp"

namespace nnkit {

struct DatasetBundle {
  Tensor images; // [N, channels, H, W], values in [0,1]
  std::vector<std::uint16_t> labels;
  std::vector<std::string> class_names;
  std::vector<std::size_t> class_counts;
  std::string split = "train";

  std::size_t size() const { return labels.size(); }
  std::size_t num_classes() const { return class_counts.size(); }

  /// Checks label range, count consistency and the [0,1] pixel range.
  void validate() const;
};

/// Noise-free, jitter-free pattern of one class: a horizontal band whose row
/// encodes the class, a center blob whose radius encodes it again, and a
/// half-arc whose side follows class parity. All elements are symmetric under
/// horizontal flip, so flip augmentation stays label-preserving.
Tensor class_prototype(std::size_t cls, std::size_t num_classes, std::size_t size);

/// Synthetic grayscale classification task. Each sample is its class
/// prototype under a small per-sample position jitter plus clipped Gaussian
/// noise, quantized to the u8 grid so that save/load round-trips exactly.
/// Empty `test_counts` defaults to balanced counts totalling a quarter of the
/// training set.
std::pair<DatasetBundle, DatasetBundle>
generate_synthetic(std::size_t num_classes, const std::vector<std::size_t> &train_counts,
                   std::size_t size, double noise_sigma, std::uint64_t seed,
                   std::vector<std::size_t> test_counts = {});

void save_dataset(const DatasetBundle &bundle, const std::string &path);
DatasetBundle load_dataset(const std::string &path);

/// Adapter for directories of per-class subdirectories holding headerless
/// 8-bit raw images of the given geometry (no compressed formats).
DatasetBundle import_image_dir(const std::string &dir, std::size_t channels, std::size_t height,
                               std::size_t width);

/// Mirror a [C,H,W] image left-right.
Tensor flip_horizontal(const Tensor &image);

} // namespace nnkit
