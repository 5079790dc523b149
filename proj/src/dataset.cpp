#include "d2e/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <stdexcept>

#include "d2e/errors.hpp"
#include "d2e/random.hpp"

namespace d2e {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out{channels, height, width, classes, {}, {}};
  out.images.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    out.images.push_back(images.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

void Dataset::validate() const {
  if (images.size() != labels.size()) throw std::invalid_argument("dataset: image/label count mismatch");
  const Shape expected = image_shape();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].shape() != expected) {
      throw DimensionError("dataset image " + std::to_string(i) + " has shape " + shape_str(images[i].shape()) +
                           ", expected " + shape_str(expected));
    }
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw std::invalid_argument("dataset label " + std::to_string(labels[i]) + " outside [0," +
                                  std::to_string(classes) + ")");
    }
  }
}

namespace {

constexpr char kMagic[4] = {'D', '2', 'E', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::size_t value) {
  if (value > UINT32_MAX) throw DatasetFormatError("count does not fit in u32");
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>((value >> shift) & 0xFF));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int k = 3; k >= 0; --k) v = (v << 8) | bytes[offset + static_cast<std::size_t>(k)];
  return v;
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

std::vector<std::uint8_t> serialize_dataset(const Dataset& ds) {
  ds.validate();
  if (ds.classes > 256) throw DatasetFormatError("labels must fit in one byte");
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, ds.size());
  put_u32(out, ds.channels);
  put_u32(out, ds.height);
  put_u32(out, ds.width);
  put_u32(out, ds.classes);
  out.reserve(kDatasetHeaderBytes + ds.size() * (shape_numel(ds.image_shape()) + 1));
  for (const auto& img : ds.images)
    for (double v : img.data()) out.push_back(quantize(v));
  for (int label : ds.labels) out.push_back(static_cast<std::uint8_t>(label));
  return out;
}

Dataset deserialize_dataset(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kDatasetHeaderBytes || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw DatasetFormatError("missing D2E1 header");
  }
  Dataset ds;
  const std::size_t n = get_u32(bytes, 4);
  ds.channels = get_u32(bytes, 8);
  ds.height = get_u32(bytes, 12);
  ds.width = get_u32(bytes, 16);
  ds.classes = get_u32(bytes, 20);
  if (ds.channels == 0 || ds.height == 0 || ds.width == 0 || ds.classes == 0) {
    throw DatasetFormatError("zero dimension in dataset header");
  }
  const std::size_t pixels = ds.channels * ds.height * ds.width;
  const std::size_t expected = kDatasetHeaderBytes + n * pixels + n;
  if (bytes.size() != expected) {
    throw DatasetFormatError("dataset length " + std::to_string(bytes.size()) + ", expected " + std::to_string(expected));
  }
  ds.images.reserve(n);
  ds.labels.reserve(n);
  const std::uint8_t* px = bytes.data() + kDatasetHeaderBytes;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> data(pixels);
    for (std::size_t p = 0; p < pixels; ++p) data[p] = px[i * pixels + p] / 255.0;
    ds.images.emplace_back(ds.image_shape(), std::move(data));
  }
  const std::uint8_t* lb = px + n * pixels;
  for (std::size_t i = 0; i < n; ++i) {
    if (lb[i] >= ds.classes) {
      throw DatasetFormatError("label " + std::to_string(lb[i]) + " >= classes " + std::to_string(ds.classes));
    }
    ds.labels.push_back(lb[i]);
  }
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  const auto bytes = serialize_dataset(ds);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_dataset(bytes);
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "two-blobs") return SyntheticKind::TwoBlobs;
  if (name == "bars") return SyntheticKind::Bars;
  if (name == "checker") return SyntheticKind::Checker;
  if (name == "binary4") return SyntheticKind::Binary4;
  throw std::invalid_argument("unknown synthetic dataset '" + std::string(name) +
                              "' (expected two-blobs|bars|checker|binary4)");
}

std::string synthetic_kind_name(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::TwoBlobs: return "two-blobs";
    case SyntheticKind::Bars: return "bars";
    case SyntheticKind::Checker: return "checker";
    case SyntheticKind::Binary4: return "binary4";
  }
  return "unknown";
}

std::size_t synthetic_classes(SyntheticKind kind) { return kind == SyntheticKind::Bars ? 4 : 2; }

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

Tensor blob_image(int label, std::size_t side, double noise, Rng& rng) {
  const double s = static_cast<double>(side);
  const double cx = (label == 0 ? 0.28 : 0.72) * s + rng.uniform(-0.08, 0.08) * s;
  const double cy = 0.5 * s + rng.uniform(-0.2, 0.2) * s;
  const double sigma = rng.uniform(0.10, 0.16) * s;
  const double peak = rng.uniform(0.6, 1.0);
  Tensor img(Shape{1, side, side});
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - cx, dy = static_cast<double>(y) + 0.5 - cy;
      const double v = peak * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)) + 0.05 * noise * rng.normal();
      img[y * side + x] = clamp01(v);
    }
  return img;
}

Tensor bar_image(int label, std::size_t side, double noise, Rng& rng) {
  const double angle = static_cast<double>(label) * std::numbers::pi / 4.0;
  const double nx = -std::sin(angle), ny = std::cos(angle);  // unit normal to the bar
  const double s = static_cast<double>(side);
  const double offset = rng.uniform(-0.18, 0.18) * s;
  const double half_width = rng.uniform(0.06, 0.11) * s;
  const double peak = rng.uniform(0.5, 1.0);
  Tensor img(Shape{1, side, side});
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      const double px = static_cast<double>(x) + 0.5 - s / 2.0, py = static_cast<double>(y) + 0.5 - s / 2.0;
      const double d = px * nx + py * ny - offset;
      const double v = peak * std::exp(-(d * d) / (2.0 * half_width * half_width)) + 0.08 * noise * rng.normal();
      img[y * side + x] = clamp01(v);
    }
  return img;
}

Tensor checker_image(int label, std::size_t side, double noise, Rng& rng) {
  const std::size_t cell = std::max<std::size_t>(1, side / 4);
  const double hi = rng.uniform(0.6, 1.0), lo = rng.uniform(0.0, 0.3);
  Tensor img(Shape{1, side, side});
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      const bool on = ((x / cell + y / cell + static_cast<std::size_t>(label)) % 2) == 0;
      img[y * side + x] = clamp01((on ? hi : lo) + 0.06 * noise * rng.normal());
    }
  return img;
}

// Pattern i mod 16 with bits b0..b3 in row-major order, label b0 xor b3.
// Consecutive pairs differ only in b0, so every even prefix is balanced.
Tensor binary4_image(std::size_t i, int& label) {
  const std::size_t bits = i % 16;
  Tensor img(Shape{1, 2, 2});
  for (std::size_t k = 0; k < 4; ++k) img[k] = static_cast<double>((bits >> k) & 1U);
  label = static_cast<int>((bits & 1U) ^ ((bits >> 3) & 1U));
  return img;
}

}  // namespace

Dataset gen_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed, const SyntheticOptions& opts) {
  const std::size_t side = kind == SyntheticKind::Binary4 ? 2 : opts.side;
  const std::size_t classes = synthetic_classes(kind);
  if (n < classes) {
    throw std::invalid_argument("gen_synthetic: n=" + std::to_string(n) + " is smaller than the class count " +
                                std::to_string(classes));
  }
  if (kind != SyntheticKind::Binary4 && side < 4) throw std::invalid_argument("gen_synthetic: side must be >= 4");
  if (!(opts.noise_scale >= 0.0)) throw std::invalid_argument("gen_synthetic: noise_scale must be >= 0");
  if (!(opts.label_noise >= 0.0 && opts.label_noise <= 1.0)) {
    throw std::invalid_argument("gen_synthetic: label_noise must be in [0, 1]");
  }
  Rng rng(seed);
  Dataset ds{1, side, side, classes, {}, {}};
  ds.images.reserve(n);
  ds.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    int label = static_cast<int>(i % classes);
    Tensor img;
    switch (kind) {
      case SyntheticKind::TwoBlobs: img = blob_image(label, side, opts.noise_scale, rng); break;
      case SyntheticKind::Bars: img = bar_image(label, side, opts.noise_scale, rng); break;
      case SyntheticKind::Checker: img = checker_image(label, side, opts.noise_scale, rng); break;
      case SyntheticKind::Binary4: img = binary4_image(i, label); break;
    }
    // Quantise so the in-memory set equals its serialised form.
    for (auto& v : img.data()) v = static_cast<double>(quantize(v)) / 255.0;
    ds.images.push_back(std::move(img));
    ds.labels.push_back(label);
  }
  if (opts.label_noise > 0.0) {
    // Separate stream: flipping labels leaves the images bit-identical.
    Rng flip(derive_seed(seed, 0x1ABE1));
    for (auto& l : ds.labels) {
      if (flip.uniform() < opts.label_noise) {
        l = static_cast<int>((static_cast<std::size_t>(l) + 1 + flip.below(classes - 1)) % classes);
      }
    }
  }
  return ds;
}

}  // namespace d2e
