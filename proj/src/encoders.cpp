#include "d2e/encoders.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace d2e {

void validate_image(const Tensor& img) {
  if (img.rank() != 3) throw DimensionError("image must be [C x H x W], got " + shape_str(img.shape()));
  for (double v : img.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("image intensity outside [0,1]: " + std::to_string(v));
  }
}

Tensor encode_direct(const Tensor& img, std::size_t steps) {
  validate_image(img);
  if (steps == 0) throw std::invalid_argument("encode_direct: T must be >= 1");
  std::vector<Tensor> frames(steps, img);
  return Tensor::stack(frames);
}

int ttfs_spike_time(double x, std::size_t steps, const TtfsOptions& opts) {
  if (x <= 0.0) return -1;
  const double last = static_cast<double>(steps - 1);
  switch (opts.map) {
    case TtfsMap::Linear:
      return static_cast<int>(std::round((1.0 - x) * last));
    case TtfsMap::ThresholdLatency: {
      const double t = std::ceil(opts.latency_threshold / x) - 1.0;
      return t <= last ? static_cast<int>(std::max(0.0, t)) : -1;
    }
  }
  return -1;
}

Tensor encode_ttfs(const Tensor& img, std::size_t steps, const TtfsOptions& opts) {
  validate_image(img);
  if (steps < 2) throw std::invalid_argument("encode_ttfs: T must be >= 2");
  Shape shape{steps};
  shape.insert(shape.end(), img.shape().begin(), img.shape().end());
  Tensor out(shape, 0.0);
  const std::size_t n = img.numel();
  for (std::size_t i = 0; i < n; ++i) {
    const int t = ttfs_spike_time(img[i], steps, opts);
    if (t >= 0) out[static_cast<std::size_t>(t) * n + i] = 1.0;
  }
  return out;
}

std::size_t ttfs_alphabet_size(std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("ttfs_alphabet_size: T must be >= 1");
  return steps + 1;
}

std::vector<std::pair<double, double>> motion_offsets(const DvsOptions& opts, std::size_t steps) {
  std::vector<std::pair<double, double>> out;
  out.reserve(steps + 1);
  if (opts.path == MotionPath::Linear) {
    for (std::size_t k = 0; k <= steps; ++k) {
      out.emplace_back(opts.velocity_x * static_cast<double>(k), opts.velocity_y * static_cast<double>(k));
    }
    return out;
  }
  const double a = opts.amplitude;
  const std::array<std::pair<double, double>, 4> corners{{{0.0, 0.0}, {a, 0.0}, {a / 2.0, a}, {0.0, 0.0}}};
  std::array<double, 3> seg{};
  double perimeter = 0.0;
  for (std::size_t s = 0; s < 3; ++s) {
    seg[s] = std::hypot(corners[s + 1].first - corners[s].first, corners[s + 1].second - corners[s].second);
    perimeter += seg[s];
  }
  for (std::size_t k = 0; k <= steps; ++k) {
    if (perimeter == 0.0 || k == steps) {
      out.emplace_back(0.0, 0.0);
      continue;
    }
    double along = perimeter * static_cast<double>(k) / static_cast<double>(steps);
    std::size_t s = 0;
    while (s < 2 && along > seg[s]) along -= seg[s++];
    const double f = seg[s] > 0 ? along / seg[s] : 0.0;
    out.emplace_back(corners[s].first + f * (corners[s + 1].first - corners[s].first),
                     corners[s].second + f * (corners[s + 1].second - corners[s].second));
  }
  return out;
}

Tensor translate_bilinear(const Tensor& img, double dx, double dy) {
  if (img.rank() != 3) throw DimensionError("translate_bilinear: expected [C x H x W], got " + shape_str(img.shape()));
  const std::size_t channels = img.dim(0), h = img.dim(1), w = img.dim(2);
  Tensor out = Tensor::like(img);
  auto clamp_index = [](double v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n - 1)));
  };
  for (std::size_t y = 0; y < h; ++y) {
    const double sy = static_cast<double>(y) - dy;
    const double y0 = std::floor(sy);
    const double fy = sy - y0;
    const std::size_t ya = clamp_index(y0, h), yb = clamp_index(y0 + 1.0, h);
    for (std::size_t x = 0; x < w; ++x) {
      const double sx = static_cast<double>(x) - dx;
      const double x0 = std::floor(sx);
      const double fx = sx - x0;
      const std::size_t xa = clamp_index(x0, w), xb = clamp_index(x0 + 1.0, w);
      for (std::size_t c = 0; c < channels; ++c) {
        const double* p = img.data().data() + c * h * w;
        const double top = (1.0 - fx) * p[ya * w + xa] + fx * p[ya * w + xb];
        const double bottom = (1.0 - fx) * p[yb * w + xa] + fx * p[yb * w + xb];
        out[(c * h + y) * w + x] = (1.0 - fy) * top + fy * bottom;
      }
    }
  }
  return out;
}

namespace {

Tensor luminance(const Tensor& img) {
  const std::size_t channels = img.dim(0), plane = img.dim(1) * img.dim(2);
  Tensor out(Shape{1, img.dim(1), img.dim(2)});
  for (std::size_t p = 0; p < plane; ++p) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) acc += img[c * plane + p];
    out[p] = acc / static_cast<double>(channels);
  }
  return out;
}

}  // namespace

Tensor encode_dvs_sim(const Tensor& img, std::size_t steps, const DvsOptions& opts) {
  validate_image(img);
  if (steps == 0) throw std::invalid_argument("encode_dvs_sim: T must be >= 1");
  if (!(opts.threshold > 0.0)) throw std::invalid_argument("encode_dvs_sim: threshold must be > 0");
  const Tensor gray = luminance(img);
  const auto offsets = motion_offsets(opts, steps);
  const std::size_t h = img.dim(1), w = img.dim(2), plane = h * w;
  Tensor out(Shape{steps, 2, h, w}, 0.0);
  Tensor prev = translate_bilinear(gray, offsets[0].first, offsets[0].second);
  for (std::size_t t = 0; t < steps; ++t) {
    Tensor cur = translate_bilinear(gray, offsets[t + 1].first, offsets[t + 1].second);
    for (std::size_t p = 0; p < plane; ++p) {
      const double delta = std::log(cur[p] + opts.log_eps) - std::log(prev[p] + opts.log_eps);
      if (delta > opts.threshold) out[(t * 2 + 0) * plane + p] = 1.0;
      if (delta < -opts.threshold) out[(t * 2 + 1) * plane + p] = 1.0;
    }
    prev = std::move(cur);
  }
  return out;
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "direct") return EncoderKind::Direct;
  if (name == "ttfs") return EncoderKind::Ttfs;
  if (name == "dvs") return EncoderKind::Dvs;
  throw std::invalid_argument("unknown encoder '" + std::string(name) + "' (expected direct|ttfs|dvs)");
}

std::string encoder_kind_name(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::Direct: return "direct";
    case EncoderKind::Ttfs: return "ttfs";
    case EncoderKind::Dvs: return "dvs";
  }
  return "unknown";
}

std::size_t encoded_channels(EncoderKind kind, std::size_t image_channels) {
  return kind == EncoderKind::Dvs ? 2 : image_channels;
}

Tensor encode(const EncoderConfig& cfg, const Tensor& img, std::size_t network_channels) {
  switch (cfg.kind) {
    case EncoderKind::Direct: {
      if (network_channels == 0 || network_channels == img.dim(0)) return encode_direct(img, cfg.steps);
      const Tensor gray = luminance(img);
      std::vector<Tensor> planes(network_channels, gray.reshaped({img.dim(1), img.dim(2)}));
      return encode_direct(Tensor::stack(planes), cfg.steps);
    }
    case EncoderKind::Ttfs:
      return encode_ttfs(img, cfg.steps, cfg.ttfs);
    case EncoderKind::Dvs:
      return encode_dvs_sim(img, cfg.steps, cfg.dvs);
  }
  throw std::logic_error("unreachable encoder kind");
}

Tensor encode_batch(const EncoderConfig& cfg, std::span<const Tensor> images, std::size_t network_channels) {
  if (images.empty()) throw std::invalid_argument("encode_batch: no images");
  std::vector<Tensor> encoded;
  encoded.reserve(images.size());
  for (const auto& img : images) encoded.push_back(encode(cfg, img, network_channels));
  const Shape& per = encoded[0].shape();  // [T, C, H, W]
  const std::size_t steps = per[0], frame = shape_numel(Shape(per.begin() + 1, per.end()));
  Shape shape{steps, images.size()};
  shape.insert(shape.end(), per.begin() + 1, per.end());
  Tensor out(shape);
  for (std::size_t b = 0; b < encoded.size(); ++b) {
    if (encoded[b].shape() != per) throw DimensionError("encode_batch: images differ in shape");
    for (std::size_t t = 0; t < steps; ++t) {
      std::copy_n(encoded[b].data().begin() + static_cast<std::ptrdiff_t>(t * frame), frame,
                  out.data().begin() + static_cast<std::ptrdiff_t>((t * images.size() + b) * frame));
    }
  }
  return out;
}

}  // namespace d2e
