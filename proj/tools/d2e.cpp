// d2e command-line runner.
//
//   d2e <subcommand> --config <path> [--set k=v]... [--out <dir>]
//
// Exit codes: 0 success, 2 configuration error, 3 numeric divergence,
// 4 I/O failure, 1 anything else.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "d2e/config.hpp"
#include "d2e/errors.hpp"
#include "d2e/experiments.hpp"
#include "d2e/parallel.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

struct Invocation {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  // capacity shortcuts
  std::size_t d = 0;
  std::size_t steps = 0;
};

void add_common(CLI::App* cmd, Invocation& inv, bool config_required) {
  auto* opt = cmd->add_option("--config", inv.config_path, "Config file (key = value lines)");
  if (config_required) opt->required();
  cmd->add_option("--set", inv.sets, "Override one key, e.g. --set transfer.alpha=0.2")->allow_extra_args(false);
  cmd->add_option("--out", inv.out_dir, "Output directory (overrides output.dir)");
}

void check_threads_env() {
  const char* env = std::getenv("D2E_THREADS");
  if (!env) return;
  const std::string_view v(env);
  long n = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc() || ptr != v.data() + v.size() || n < 1) {
    throw d2e::ConfigError("D2E_THREADS", "expected a positive integer, got '" + std::string(v) + "'");
  }
  d2e::set_kernel_threads(static_cast<std::size_t>(n));
}

d2e::ExperimentConfig load(const Invocation& inv, bool require_seed) {
  d2e::ConfigMap map;
  if (!inv.config_path.empty()) map = d2e::load_config_file(inv.config_path);
  for (const auto& s : inv.sets) d2e::apply_override(map, s);
  if (inv.d) map["capacity.d"] = std::to_string(inv.d);
  if (inv.steps) map["capacity.T"] = std::to_string(inv.steps);
  if (!inv.out_dir.empty()) map["output.dir"] = inv.out_dir;
  return d2e::build_config(map, require_seed);
}

int run(int argc, char** argv) {
  CLI::App app{"d2e: direct-to-event transfer experiments for spiking networks"};
  app.require_subcommand(1);
  Invocation inv;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"pretrain", "Train the direct-coded teacher"},
      {"transfer", "Finetune the teacher on event input (transfer.method = tsf|skd)"},
      {"sweep-alpha", "SKD over sweep.alphas and sweep.seeds"},
      {"ablate-loss", "SKD with each distillation loss"},
      {"bound-trace", "SKD run with the KL bound evaluated every epoch"},
      {"energy", "SOP-based energy estimate from measured firing rates"},
      {"cost", "Training FLOP ledger for TSF vs SKD"},
      {"capacity", "TTFS information capacity bound and codeword count"},
      {"collapse", "First-layer pre-activation ratio under TTFS vs direct"},
      {"mismatch", "Event vs direct gradient norm at the direct optimum"},
  };
  std::string chosen;
  for (const auto& [name, help] : commands) {
    auto* cmd = app.add_subcommand(name, help);
    const bool closed_form = name == "capacity" || name == "cost";
    add_common(cmd, inv, !closed_form);
    if (name == "capacity") {
      cmd->add_option("--d", inv.d, "Pixel count");
      cmd->add_option("--T", inv.steps, "Time steps");
    }
    cmd->callback([&chosen, name = name] { chosen = name; });
  }

  std::string data_kind;
  auto* gen = app.add_subcommand("gen-data", "Write the configured synthetic train/test sets as D2E1 files");
  add_common(gen, inv, true);
  gen->callback([&chosen] { chosen = "gen-data"; });

  auto* keys = app.add_subcommand("keys", "List every config key with its default");
  keys->callback([&chosen] { chosen = "keys"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    check_threads_env();
    if (chosen == "keys") {
      for (const auto& [k, v] : d2e::config_keys()) std::cout << k << " = " << v << "\n";
      return 0;
    }
    const bool closed_form = chosen == "capacity" || chosen == "cost";
    const d2e::ExperimentConfig cfg = load(inv, !closed_form);
    if (chosen == "gen-data") {
      const d2e::Workbench wb = d2e::make_workbench(cfg, cfg.seed);
      std::error_code ec;
      std::filesystem::create_directories(cfg.out_dir, ec);
      if (ec) throw d2e::IoError("cannot create '" + cfg.out_dir.string() + "': " + ec.message());
      d2e::write_dataset(wb.train, cfg.out_dir / "train.d2e");
      if (!wb.test.empty()) d2e::write_dataset(wb.test, cfg.out_dir / "test.d2e");
      std::cout << "wrote " << wb.train.size() << " train / " << wb.test.size() << " test samples to "
                << cfg.out_dir.string() << "\n";
      return 0;
    }
    d2e::run_subcommand(chosen, cfg, std::cout);
    return 0;
  } catch (const d2e::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const d2e::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const d2e::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const d2e::DatasetFormatError& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
