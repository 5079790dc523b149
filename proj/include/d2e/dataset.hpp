#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "d2e/tensor.hpp"

namespace d2e {

/// Labelled images, each a [C, H, W] tensor with intensities in [0, 1].
struct Dataset {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t classes = 0;
  std::vector<Tensor> images;
  std::vector<int> labels;

  std::size_t size() const noexcept { return images.size(); }
  bool empty() const noexcept { return images.empty(); }
  Shape image_shape() const { return {channels, height, width}; }

  Dataset subset(std::span<const std::size_t> indices) const;
  /// Throws if shapes or labels are inconsistent.
  void validate() const;
};

/// Thrown for malformed dataset files; carries the offending detail.
class DatasetFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary layout (little-endian):
//   "D2E1" | u32 n | u32 C | u32 H | u32 W | u32 classes | n*C*H*W bytes | n label bytes
// Intensities are stored as round(255 x) and read back as byte / 255.
inline constexpr std::size_t kDatasetHeaderBytes = 24;

std::vector<std::uint8_t> serialize_dataset(const Dataset& ds);
Dataset deserialize_dataset(std::span<const std::uint8_t> bytes);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

enum class SyntheticKind {
  TwoBlobs,  ///< 2 classes: Gaussian blob in the left or right half.
  Bars,      ///< 4 classes: bar at 0, 45, 90 or 135 degrees.
  Checker,   ///< 2 classes: checkerboard phase.
  Binary4,   ///< 2 classes on 1 x 2 x 2 binary images cycling all 16 patterns; label x0 xor x3.
};

SyntheticKind parse_synthetic_kind(std::string_view name);
std::string synthetic_kind_name(SyntheticKind kind);
std::size_t synthetic_classes(SyntheticKind kind);

struct SyntheticOptions {
  std::size_t side = 16;
  /// Multiplier on the per-kind pixel noise.
  double noise_scale = 1.0;
  /// Fraction of labels replaced by a uniformly drawn wrong class. Images are
  /// unaffected, so the true classes stay balanced.
  double label_noise = 0.0;
};

/// Deterministic, class-balanced 1 x side x side dataset quantised to bytes
/// (binary4 ignores side and the pixel noise; n should be even for balance).
Dataset gen_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed, const SyntheticOptions& opts = {});

}  // namespace d2e
