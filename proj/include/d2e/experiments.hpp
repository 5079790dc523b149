#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "d2e/analysis.hpp"
#include "d2e/config.hpp"
#include "d2e/transfer.hpp"

namespace d2e {

/// Datasets, architecture and encoder for one seeded run.
struct Workbench {
  Dataset train;
  Dataset test;
  ArchitectureSpec spec;
  EncoderConfig encoder;
  std::uint64_t seed = 0;

  /// Held-out set when present, else the train set.
  const Dataset& eval() const { return test.empty() ? train : test; }
  TrainSetup setup() const;
};

/// Derived per-purpose seeds, so that changing one stage never shifts another.
enum class SeedStream : std::uint64_t { TrainData = 1, TestData = 2, Init = 3, Pretrain = 4, Transfer = 5 };
std::uint64_t stream_seed(std::uint64_t run_seed, SeedStream stream);

Workbench make_workbench(const ExperimentConfig& cfg, std::uint64_t run_seed);
ArchitectureSpec make_architecture(const ExperimentConfig& cfg, std::size_t in_channels, std::size_t side,
                                   std::size_t classes);

TrainResult run_pretrain(const ExperimentConfig& cfg, const Workbench& wb);
/// method "tsf" or "skd"; alpha and loss are taken from overrides of cfg.transfer.
TrainResult run_transfer(const ExperimentConfig& cfg, const Workbench& wb, const SpikingNetwork& teacher,
                         std::string_view method, double alpha, DistillLoss loss);

struct AlphaRun {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  EpochRecord final;
};

struct AlphaRow {
  double alpha = 0.0;
  double acc_evt_hard = 0.0;  ///< mean over seeds
  double acc_evt_soft = 0.0;
  double kl_mean = 0.0;
  std::size_t seeds = 0;
};

struct AlphaSweep {
  std::vector<AlphaRun> runs;
  std::vector<AlphaRow> rows;
};

AlphaSweep sweep_alpha(const ExperimentConfig& cfg);

struct LossRow {
  DistillLoss loss = DistillLoss::ForwardKL;
  double acc_evt_hard = 0.0;
  double acc_evt_soft = 0.0;
  /// Converged forward KL(teacher on direct || student on event), mean over seeds.
  double forward_kl = 0.0;
  std::size_t seeds = 0;
};

std::vector<LossRow> ablate_loss(const ExperimentConfig& cfg);

struct BoundTrace {
  TrainLog log;
  BoundReport report;
  double pearson_r = 0.0;
  bool pearson_defined = false;
};

/// SKD run with the bound evaluated at every epoch (epoch 0 = untouched student).
BoundTrace bound_trace(const ExperimentConfig& cfg);

struct EnergyResult {
  std::vector<SopEntry> layers;
  EnergyReport report;
};

EnergyResult energy_experiment(const ExperimentConfig& cfg);
CostLedger cost_experiment(const ExperimentConfig& cfg);

struct CapacityResult {
  double bits = 0.0;
  std::size_t enumerated = 0;  ///< 0 when enumeration is skipped
  std::size_t expected = 0;    ///< (T+1)^d for the enumerated case
};

CapacityResult capacity_experiment(const ExperimentConfig& cfg);

struct CollapseResult {
  CollapseStats stats;
  std::size_t steps = 0;
  std::size_t n = 0;
};

/// Random-init network; i.i.d. U[0,1] pixels or the configured dataset.
CollapseResult collapse_experiment(const ExperimentConfig& cfg);

struct MismatchResult {
  MismatchNorms norms;
  /// Mean minibatch gradient norm of the final pretraining epoch.
  double terminal_grad_norm = 0.0;
};

MismatchResult mismatch_experiment(const ExperimentConfig& cfg);

inline constexpr std::string_view kSubcommands[] = {"pretrain", "transfer", "sweep-alpha", "ablate-loss",
                                                    "bound-trace", "energy", "cost", "capacity",
                                                    "collapse", "mismatch"};

/// Runs one subcommand, writes its artifacts under cfg.out_dir and prints a
/// short summary to `out`. Throws ConfigError, DivergenceError or IoError.
void run_subcommand(std::string_view name, const ExperimentConfig& cfg, std::ostream& out);

}  // namespace d2e
