#include "d2e/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace d2e {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::pair<std::string, std::string> split_assignment(std::string_view line, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) throw ConfigError(where, "expected key=value, got '" + std::string(line) + "'");
  const auto key = trim(line.substr(0, eq));
  if (key.empty()) throw ConfigError(where, "empty key");
  return {std::string(key), std::string(trim(line.substr(eq + 1)))};
}

std::uint64_t to_u64(std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw std::invalid_argument("expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::size_t to_size(std::string_view v) { return static_cast<std::size_t>(to_u64(v)); }

double to_double(std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    throw std::invalid_argument("expected a finite number, got '" + std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected true|false, got '" + std::string(v) + "'");
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (item.empty()) throw std::invalid_argument("empty list item");
    out.push_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

TtfsMap to_ttfs_map(std::string_view v) {
  if (v == "linear") return TtfsMap::Linear;
  if (v == "threshold_latency") return TtfsMap::ThresholdLatency;
  throw std::invalid_argument("unknown ttfs map '" + std::string(v) + "' (expected linear|threshold_latency)");
}

MotionPath to_motion_path(std::string_view v) {
  if (v == "triangle") return MotionPath::Triangle;
  if (v == "linear") return MotionPath::Linear;
  throw std::invalid_argument("unknown motion path '" + std::string(v) + "' (expected triangle|linear)");
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

struct KeySpec {
  std::string key;
  std::string fallback;
  Setter set;
};

void add_training_keys(std::vector<KeySpec>& keys, const char* prefix, TransferConfig ExperimentConfig::*member,
                       const TransferConfig& defaults) {
  auto k = [prefix](const char* name) { return std::string(prefix) + "." + name; };
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  keys.push_back({k("epochs"), num(static_cast<double>(defaults.epochs)),
                  [member](ExperimentConfig& c, std::string_view v) { (c.*member).epochs = to_size(v); }});
  keys.push_back({k("batch_size"), num(static_cast<double>(defaults.batch_size)),
                  [member](ExperimentConfig& c, std::string_view v) { (c.*member).batch_size = to_size(v); }});
  keys.push_back({k("lr_scale"), num(defaults.lr_scale),
                  [member](ExperimentConfig& c, std::string_view v) { (c.*member).lr_scale = to_double(v); }});
  keys.push_back({k("momentum"), num(defaults.momentum),
                  [member](ExperimentConfig& c, std::string_view v) { (c.*member).momentum = to_double(v); }});
  keys.push_back({k("warmup_epochs"), num(static_cast<double>(defaults.warmup_epochs)),
                  [member](ExperimentConfig& c, std::string_view v) { (c.*member).warmup_epochs = to_size(v); }});
}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    std::vector<KeySpec> t;
    t.push_back({"seed", "<required>", [](ExperimentConfig& c, std::string_view v) { c.seed = to_u64(v); }});
    t.push_back({"output.dir", "out", [](ExperimentConfig& c, std::string_view v) { c.out_dir = std::string(v); }});

    t.push_back({"data.kind", "bars",
                 [](ExperimentConfig& c, std::string_view v) { c.data.kind = parse_synthetic_kind(v); }});
    t.push_back({"data.n", "400", [](ExperimentConfig& c, std::string_view v) { c.data.n = to_size(v); }});
    t.push_back({"data.test_n", "400", [](ExperimentConfig& c, std::string_view v) { c.data.test_n = to_size(v); }});
    t.push_back({"data.side", "16",
                 [](ExperimentConfig& c, std::string_view v) { c.data.synthetic.side = to_size(v); }});
    t.push_back({"data.noise_scale", "1",
                 [](ExperimentConfig& c, std::string_view v) { c.data.synthetic.noise_scale = to_double(v); }});
    t.push_back({"data.label_noise", "0",
                 [](ExperimentConfig& c, std::string_view v) { c.data.synthetic.label_noise = to_double(v); }});
    t.push_back({"data.path", "", [](ExperimentConfig& c, std::string_view v) { c.data.path = std::string(v); }});
    t.push_back(
        {"data.test_path", "", [](ExperimentConfig& c, std::string_view v) { c.data.test_path = std::string(v); }});

    t.push_back({"model.arch", "tiny-mlp",
                 [](ExperimentConfig& c, std::string_view v) {
                   if (v != "tiny-mlp" && v != "tiny-conv" && v != "inline") {
                     throw std::invalid_argument("unknown architecture '" + std::string(v) +
                                                 "' (expected tiny-mlp|tiny-conv|inline)");
                   }
                   c.model.arch = std::string(v);
                 }});
    t.push_back({"model.layers", "",
                 [](ExperimentConfig& c, std::string_view v) {
                   parse_layer_list(v);  // reject bad syntax at load time
                   c.model.layers = std::string(v);
                 }});
    t.push_back({"model.hidden", "64", [](ExperimentConfig& c, std::string_view v) { c.model.hidden = to_size(v); }});
    t.push_back({"lif.tau", "2", [](ExperimentConfig& c, std::string_view v) { c.model.lif.tau = to_double(v); }});
    t.push_back({"lif.v_threshold", "1",
                 [](ExperimentConfig& c, std::string_view v) { c.model.lif.v_threshold = to_double(v); }});
    t.push_back({"lif.v_reset", "0",
                 [](ExperimentConfig& c, std::string_view v) { c.model.lif.v_reset = to_double(v); }});
    t.push_back({"lif.surrogate_alpha", "2",
                 [](ExperimentConfig& c, std::string_view v) { c.model.lif.surrogate_alpha = to_double(v); }});
    t.push_back({"lif.detach_reset", "false",
                 [](ExperimentConfig& c, std::string_view v) { c.model.lif.detach_reset = to_bool(v); }});

    t.push_back({"encoder.kind", "ttfs",
                 [](ExperimentConfig& c, std::string_view v) {
                   c.encoder.kind = parse_encoder_kind(v);
                   if (c.encoder.kind == EncoderKind::Direct) {
                     throw std::invalid_argument("the event encoder must be ttfs or dvs");
                   }
                 }});
    t.push_back({"encoder.steps", "8", [](ExperimentConfig& c, std::string_view v) {
                   c.encoder.steps = to_size(v);
                   if (c.encoder.steps == 0) throw std::invalid_argument("T must be >= 1");
                 }});
    t.push_back({"encoder.ttfs_map", "linear",
                 [](ExperimentConfig& c, std::string_view v) { c.encoder.ttfs.map = to_ttfs_map(v); }});
    t.push_back({"encoder.latency_threshold", "1",
                 [](ExperimentConfig& c, std::string_view v) { c.encoder.ttfs.latency_threshold = to_double(v); }});
    t.push_back({"encoder.dvs_path", "triangle",
                 [](ExperimentConfig& c, std::string_view v) { c.encoder.dvs.path = to_motion_path(v); }});
    t.push_back({"encoder.dvs_amplitude", "2",
                 [](ExperimentConfig& c, std::string_view v) { c.encoder.dvs.amplitude = to_double(v); }});
    t.push_back({"encoder.dvs_velocity_x", "0",
                 [](ExperimentConfig& c, std::string_view v) { c.encoder.dvs.velocity_x = to_double(v); }});
    t.push_back({"encoder.dvs_velocity_y", "0",
                 [](ExperimentConfig& c, std::string_view v) { c.encoder.dvs.velocity_y = to_double(v); }});
    t.push_back({"encoder.dvs_threshold", "0.15",
                 [](ExperimentConfig& c, std::string_view v) { c.encoder.dvs.threshold = to_double(v); }});

    TransferConfig pre_defaults;
    pre_defaults.epochs = 20;
    pre_defaults.lr_scale = 8.0;
    add_training_keys(t, "pretrain", &ExperimentConfig::pretrain, pre_defaults);
    TransferConfig ft_defaults;
    ft_defaults.lr_scale = 8.0;
    add_training_keys(t, "transfer", &ExperimentConfig::transfer, ft_defaults);
    t.push_back({"transfer.method", "skd", [](ExperimentConfig& c, std::string_view v) {
                   if (v != "tsf" && v != "skd") throw std::invalid_argument("expected tsf|skd");
                   c.method = std::string(v);
                 }});
    t.push_back({"transfer.alpha", "0.4",
                 [](ExperimentConfig& c, std::string_view v) { c.transfer.alpha = to_double(v); }});
    t.push_back({"transfer.distill_loss", "forward_kl",
                 [](ExperimentConfig& c, std::string_view v) { c.transfer.distill_loss = parse_distill_loss(v); }});
    t.push_back({"transfer.temperature", "1",
                 [](ExperimentConfig& c, std::string_view v) { c.transfer.temperature = to_double(v); }});

    t.push_back({"sweep.alphas", "0.0,0.2,0.4,0.6,0.8,1.0", [](ExperimentConfig& c, std::string_view v) {
                   c.sweep.alphas.clear();
                   for (auto item : split_list(v)) c.sweep.alphas.push_back(to_double(item));
                 }});
    t.push_back({"sweep.seeds", "3", [](ExperimentConfig& c, std::string_view v) {
                   c.sweep.seeds = to_size(v);
                   if (c.sweep.seeds == 0) throw std::invalid_argument("need at least one seed");
                 }});
    t.push_back({"ablate.losses", "forward_kl,reverse_kl,jensen_shannon,mse_softmax,l1_softmax",
                 [](ExperimentConfig& c, std::string_view v) {
                   c.sweep.losses.clear();
                   for (auto item : split_list(v)) c.sweep.losses.push_back(parse_distill_loss(item));
                 }});

    t.push_back({"bound.tv_mode", "fit_from_trajectory",
                 [](ExperimentConfig& c, std::string_view v) { c.bound.tv_mode = parse_tv_mode(v); }});
    t.push_back({"bound.tv_constant", "0.1",
                 [](ExperimentConfig& c, std::string_view v) { c.bound.tv_constant = to_double(v); }});

    t.push_back({"energy.e_mac", "4.6e-12", [](ExperimentConfig& c, std::string_view v) {
                   c.energy.e_mac = to_double(v);
                   if (!(c.energy.e_mac > 0.0)) throw std::invalid_argument("must be > 0");
                 }});
    t.push_back({"energy.e_ac", "0.9e-12", [](ExperimentConfig& c, std::string_view v) {
                   c.energy.e_ac = to_double(v);
                   if (!(c.energy.e_ac > 0.0)) throw std::invalid_argument("must be > 0");
                 }});

    t.push_back({"cost.mode", "skd",
                 [](ExperimentConfig& c, std::string_view v) { c.cost.mode = parse_cost_mode(v); }});
    t.push_back({"cost.f_evt", "", [](ExperimentConfig& c, std::string_view v) { c.cost.f_evt = to_double(v); }});
    t.push_back({"cost.f_dir", "", [](ExperimentConfig& c, std::string_view v) { c.cost.f_dir = to_double(v); }});

    t.push_back({"capacity.d", "3072", [](ExperimentConfig& c, std::string_view v) { c.capacity.d = to_size(v); }});
    t.push_back(
        {"capacity.T", "8", [](ExperimentConfig& c, std::string_view v) { c.capacity.steps = to_size(v); }});
    t.push_back({"capacity.enumerate_d", "2",
                 [](ExperimentConfig& c, std::string_view v) { c.capacity.enumerate_d = to_size(v); }});
    t.push_back({"capacity.enumerate_T", "3",
                 [](ExperimentConfig& c, std::string_view v) { c.capacity.enumerate_steps = to_size(v); }});
    t.push_back({"capacity.enumerate_levels", "256",
                 [](ExperimentConfig& c, std::string_view v) { c.capacity.enumerate_levels = to_size(v); }});

    t.push_back({"collapse.n", "1000", [](ExperimentConfig& c, std::string_view v) { c.collapse.n = to_size(v); }});
    t.push_back(
        {"collapse.T", "8", [](ExperimentConfig& c, std::string_view v) { c.collapse.steps = to_size(v); }});
    t.push_back({"collapse.source", "uniform", [](ExperimentConfig& c, std::string_view v) {
                   if (v != "uniform" && v != "dataset") throw std::invalid_argument("expected uniform|dataset");
                   c.collapse.source = std::string(v);
                 }});

    t.push_back({"report.formats", "csv,json", [](ExperimentConfig& c, std::string_view v) {
                   c.report.csv = c.report.json = false;
                   for (auto item : split_list(v)) {
                     if (item == "csv") c.report.csv = true;
                     else if (item == "json") c.report.json = true;
                     else throw std::invalid_argument("unknown format '" + std::string(item) + "' (expected csv|json)");
                   }
                 }});
    t.push_back(
        {"report.plots", "true", [](ExperimentConfig& c, std::string_view v) { c.report.plots = to_bool(v); }});
    return t;
  }();
  return table;
}

/// Re-labels a validate() message ("transfer.alpha must ...") for the section it came from.
[[noreturn]] void rethrow_validation(const std::invalid_argument& e, std::string_view section) {
  std::string msg = e.what();
  const auto dot = msg.find('.');
  const auto space = msg.find(' ');
  std::string field = std::string(section);
  if (dot != std::string::npos && space != std::string::npos && dot < space) {
    field = std::string(section) + msg.substr(dot, space - dot);
    msg = msg.substr(space + 1);
  }
  throw ConfigError(field, msg);
}

}  // namespace

ConfigMap parse_config_text(std::string_view text, std::string_view origin) {
  ConfigMap map;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto [key, value] = split_assignment(line, std::string(origin) + ":" + std::to_string(line_no));
    map[key] = value;
  }
  return map;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

void apply_override(ConfigMap& map, std::string_view assignment) {
  auto [key, value] = split_assignment(trim(assignment), "--set");
  map[key] = value;
}

ExperimentConfig build_config(const ConfigMap& map, bool require_seed) {
  ExperimentConfig cfg;
  cfg.pretrain.epochs = 20;
  cfg.pretrain.lr_scale = 8.0;
  cfg.transfer.lr_scale = 8.0;
  const auto& table = key_table();
  for (const auto& [key, value] : map) {
    const auto it = std::find_if(table.begin(), table.end(), [&](const KeySpec& s) { return key == s.key; });
    if (it == table.end()) throw ConfigError(key, "unknown key");
    try {
      it->set(cfg, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(key, e.what());
    }
  }
  if (require_seed && !map.contains("seed")) throw ConfigError("seed", "missing (every experiment needs an explicit seed)");
  if (cfg.model.arch == "inline" && cfg.model.layers.empty()) {
    throw ConfigError("model.layers", "required when model.arch=inline");
  }
  if (cfg.data.path.empty() && !cfg.data.test_path.empty()) {
    throw ConfigError("data.test_path", "only valid together with data.path");
  }
  cfg.pretrain.steps = cfg.transfer.steps = cfg.encoder.steps;
  try {
    cfg.model.lif.validate();
  } catch (const std::invalid_argument& e) {
    rethrow_validation(e, "lif");
  }
  try {
    cfg.pretrain.validate();
  } catch (const std::invalid_argument& e) {
    rethrow_validation(e, "pretrain");
  }
  try {
    cfg.transfer.validate();
  } catch (const std::invalid_argument& e) {
    rethrow_validation(e, "transfer");
  }
  for (double a : cfg.sweep.alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("sweep.alphas", "every alpha must lie in [0,1]");
  }
  if (cfg.bound.tv_constant < 0.0 || cfg.bound.tv_constant > 1.0) {
    throw ConfigError("bound.tv_constant", "must lie in [0,1]");
  }
  return cfg;
}

std::vector<std::pair<std::string, std::string>> config_keys() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : key_table()) out.emplace_back(s.key, s.fallback);
  return out;
}

}  // namespace d2e
