#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "d2e/tensor.hpp"

namespace d2e {

// Images are Tensors of shape [C, H, W] with intensities in [0, 1].
void validate_image(const Tensor& img);

/// Real-valued image replicated across T steps: [T, C, H, W].
Tensor encode_direct(const Tensor& img, std::size_t steps);

enum class TtfsMap {
  /// t* = round((1 - x)(T - 1)), half away from zero; x = 0 never fires.
  Linear,
  /// Integrate x per step against a threshold: t* = ceil(theta / x) - 1 if < T.
  ThresholdLatency,
};

struct TtfsOptions {
  TtfsMap map = TtfsMap::Linear;
  double latency_threshold = 1.0;
};

/// Spike step for one intensity, or -1 for the empty codeword.
int ttfs_spike_time(double x, std::size_t steps, const TtfsOptions& opts = {});

/// At-most-one-spike binary train [T, C, H, W].
Tensor encode_ttfs(const Tensor& img, std::size_t steps, const TtfsOptions& opts = {});

/// Distinct single-pixel TTFS codewords: T + 1 (T single-spike words and the empty word).
std::size_t ttfs_alphabet_size(std::size_t steps);

enum class MotionPath { Triangle, Linear };

struct DvsOptions {
  MotionPath path = MotionPath::Triangle;
  /// Triangle path: closed loop (0,0) -> (A,0) -> (A/2,A) -> (0,0) in (dx, dy) pixels.
  double amplitude = 2.0;
  /// Linear path: per-step translation in pixels.
  double velocity_x = 0.0;
  double velocity_y = 0.0;
  double threshold = 0.15;
  double log_eps = 1.0 / 255.0;
};

/// (dx, dy) offsets of the T + 1 frames.
std::vector<std::pair<double, double>> motion_offsets(const DvsOptions& opts, std::size_t steps);

/// Image translated by (dx, dy) with bilinear resampling and edge clamping.
Tensor translate_bilinear(const Tensor& img, double dx, double dy);

/// ON/OFF log-intensity change events [T, 2, H, W] from the channel-mean luminance.
Tensor encode_dvs_sim(const Tensor& img, std::size_t steps, const DvsOptions& opts = {});

enum class EncoderKind { Direct, Ttfs, Dvs };

EncoderKind parse_encoder_kind(std::string_view name);
std::string encoder_kind_name(EncoderKind kind);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::Ttfs;
  std::size_t steps = 8;
  TtfsOptions ttfs;
  DvsOptions dvs;
};

/// Channel count the encoder produces for an image with image_channels channels.
std::size_t encoded_channels(EncoderKind kind, std::size_t image_channels);

/// Encodes one image into [T, C', H, W]. When network_channels differs from the
/// encoder's native channel count (a direct teacher feeding a DVS-shaped net),
/// direct coding replicates the channel-mean luminance across network_channels.
Tensor encode(const EncoderConfig& cfg, const Tensor& img, std::size_t network_channels = 0);

/// Encodes images into one [T, B, C', H, W] sequence.
Tensor encode_batch(const EncoderConfig& cfg, std::span<const Tensor> images, std::size_t network_channels = 0);

}  // namespace d2e
