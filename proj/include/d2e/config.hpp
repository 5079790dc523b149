#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "d2e/analysis.hpp"
#include "d2e/dataset.hpp"
#include "d2e/encoders.hpp"
#include "d2e/network.hpp"
#include "d2e/transfer.hpp"

namespace d2e {

/// Bad or missing configuration value; field() names the key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Raw key=value pairs. Later assignments replace earlier ones.
using ConfigMap = std::map<std::string, std::string, std::less<>>;

/// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
ConfigMap parse_config_text(std::string_view text, std::string_view origin = "<config>");
ConfigMap load_config_file(const std::filesystem::path& path);
/// Applies one "key=value" override.
void apply_override(ConfigMap& map, std::string_view assignment);

struct DataConfig {
  /// Synthetic generator, or a DatasetFile when path is set.
  SyntheticKind kind = SyntheticKind::Bars;
  std::size_t n = 400;
  /// Held-out evaluation set size (synthetic only); 0 evaluates on the train set.
  std::size_t test_n = 400;
  SyntheticOptions synthetic;
  std::string path;
  std::string test_path;
};

struct ModelConfig {
  /// "tiny-mlp", "tiny-conv" or "inline" (layers given in `layers`).
  std::string arch = "tiny-mlp";
  std::string layers;
  std::size_t hidden = 64;
  LIFParams lif;
};

struct SweepConfig {
  std::vector<double> alphas{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::size_t seeds = 3;
  std::vector<DistillLoss> losses{std::begin(kAllDistillLosses), std::end(kAllDistillLosses)};
};

struct BoundConfig {
  TvMode tv_mode = TvMode::FitFromTrajectory;
  double tv_constant = 0.1;
};

struct EnergyConfig {
  double e_mac = 4.6e-12;
  double e_ac = 0.9e-12;
};

struct CostConfig {
  CostMode mode = CostMode::Skd;
  /// Explicit per-forward FLOPs; when both are set the architecture is not consulted.
  std::optional<double> f_evt;
  std::optional<double> f_dir;
};

struct CapacityConfig {
  std::size_t d = 3072;
  std::size_t steps = 8;
  /// Pixel count for the exhaustive codeword check; 0 skips it.
  std::size_t enumerate_d = 2;
  std::size_t enumerate_steps = 3;
  std::size_t enumerate_levels = 256;
};

struct CollapseConfig {
  std::size_t n = 1000;
  std::size_t steps = 8;
  /// "uniform" (i.i.d. U[0,1] pixels) or "dataset".
  std::string source = "uniform";
};

struct ReportConfig {
  bool csv = true;
  bool json = true;
  bool plots = true;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  ModelConfig model;
  EncoderConfig encoder;
  TransferConfig pretrain;
  TransferConfig transfer;
  /// "tsf" or "skd" for the transfer subcommand.
  std::string method = "skd";
  SweepConfig sweep;
  BoundConfig bound;
  EnergyConfig energy;
  CostConfig cost;
  CapacityConfig capacity;
  CollapseConfig collapse;
  ReportConfig report;
  std::filesystem::path out_dir = "out";
};

/// Builds a config from raw pairs. Unknown keys, malformed values and a
/// missing seed raise ConfigError naming the field. Closed-form subcommands
/// with no randomness pass require_seed = false.
ExperimentConfig build_config(const ConfigMap& map, bool require_seed = true);

/// Every accepted key with its default, in file order (used for docs and --help).
std::vector<std::pair<std::string, std::string>> config_keys();

}  // namespace d2e
