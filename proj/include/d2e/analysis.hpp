#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "d2e/dataset.hpp"
#include "d2e/encoders.hpp"
#include "d2e/network.hpp"
#include "d2e/transfer.hpp"

namespace d2e {

// ---------------------------------------------------------------------------
// Accuracy and divergence over prediction tables [N x C]

/// Mean predicted probability of the true class (deterministic labels).
double soft_accuracy(const Tensor& probs, std::span<const int> labels);
/// General form E_x E_{y|x}[f(y|x)] with label distributions [N x C].
double soft_accuracy(const Tensor& probs, const Tensor& label_dist);
double hard_accuracy(const Tensor& probs, std::span<const int> labels);
/// Per-row KL(p || q) in nats, same clamping as the tape op.
std::vector<double> row_kl(const Tensor& p, const Tensor& q);
double mean_kl(const Tensor& p, const Tensor& q);

/// Soft accuracy of a network on an encoded dataset.
double soft_accuracy(const SpikingNetwork& net, const Dataset& ds, const EncoderConfig& enc);

/// E_x KL(teacher(teacher_enc(x)) || student(student_enc(x))).
double expected_kl(const SpikingNetwork& teacher, const SpikingNetwork& student, const Dataset& ds,
                   const EncoderConfig& teacher_enc, const EncoderConfig& student_enc);

// ---------------------------------------------------------------------------
// Total variation and Pinsker

/// 1/2 sum |p - q|; throws std::invalid_argument on length mismatch.
double tv_exact(std::span<const double> p, std::span<const double> q);
double kl_exact(std::span<const double> p, std::span<const double> q);

struct PinskerResult {
  double tv = 0.0;
  double bound = 0.0;  ///< sqrt(KL(p||q) / 2)
  bool holds = false;
};

PinskerResult pinsker_check(std::span<const double> p, std::span<const double> q);

// ---------------------------------------------------------------------------
// KL bound on the cross-domain soft-accuracy gap

enum class TvMode { Exact, FittedConstant, FitFromTrajectory };

std::string tv_mode_name(TvMode mode);
TvMode parse_tv_mode(std::string_view name);

class UnsupportedModeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BoundRecord {
  std::size_t epoch = 0;
  double kl_mean = 0.0;
  double tv_estimate = 0.0;
  double acc_gap = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct BoundReport {
  TvMode tv_mode = TvMode::FittedConstant;
  std::vector<BoundRecord> records;
};

/// rhs = sqrt(kl_mean / 2) + 2 tv
BoundRecord make_bound_record(std::size_t epoch, double kl_mean, double tv, double acc_gap);

/// TV between the empirical distributions of direct- and event-coded input
/// sequences of a dataset, compared as exact tensors on the network's input
/// embedding. Only defined for binary-pixel datasets (finite input space).
double input_tv_exact(const Dataset& ds, const EncoderConfig& event_enc, std::size_t network_channels);

/// Smallest c >= 0 with sqrt(kl/2) + 2c >= gap at every point.
double fit_tv_constant(std::span<const double> kl_means, std::span<const double> gaps);

/// One bound evaluation for a teacher/student pair.
BoundRecord theorem1_report(const SpikingNetwork& teacher, const SpikingNetwork& student, const Dataset& ds,
                            const EncoderConfig& event_enc, TvMode mode, double tv_constant = 0.1);

/// Bound report over a training trajectory (records of TrainLog plus the reference accuracy).
BoundReport bound_trajectory(const TrainLog& log, TvMode mode, double tv_value);

// ---------------------------------------------------------------------------
// Correlation

class UndefinedCorrelationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

double pearson(std::span<const double> xs, std::span<const double> ys);

// ---------------------------------------------------------------------------
// Encoding capacity

/// d * log2(T + 1) bits.
double capacity_bound(std::size_t pixels, std::size_t steps);

/// Distinct TTFS codewords over all d-pixel images on a grid of `levels`
/// intensities {0, 1/(levels-1), ..., 1}, by exhaustive enumeration.
std::size_t count_ttfs_codewords(std::size_t pixels, std::size_t steps, std::size_t levels = 256);

// ---------------------------------------------------------------------------
// Layer-1 pre-activation collapse

struct CollapseStats {
  double mean_direct = 0.0;
  double mean_ttfs_per_step = 0.0;
  /// mean_ttfs_per_step / mean_direct; empty when the direct mean is zero.
  std::optional<double> ratio;
};

/// Bias-free first-layer pre-activation means, averaged over samples, neurons and steps.
CollapseStats layer1_collapse_stats(const SpikingNetwork& net, const Dataset& ds, std::size_t steps,
                                    const TtfsOptions& ttfs = {});

// ---------------------------------------------------------------------------
// Gradient mismatch at the direct optimum

struct MismatchNorms {
  double event_norm = 0.0;
  double direct_norm = 0.0;
};

/// l2 norm of the dataset-mean CE gradient under event and under direct input.
MismatchNorms gradient_mismatch_norm(const SpikingNetwork& net, const Dataset& ds, const EncoderConfig& event_enc);

// ---------------------------------------------------------------------------
// Synaptic operations, energy and training cost

struct SopEntry {
  std::size_t layer = 0;  ///< index into ArchitectureSpec::layers
  std::string kind;
  double sops = 0.0;
};

/// Conv: C_in K^2 H_l W_l C_out on the output grid; affine/readout: fan_in * fan_out.
std::vector<SopEntry> count_sops(const ArchitectureSpec& spec);

struct EnergyReport {
  std::vector<double> sops;
  std::vector<double> rates_direct;  ///< layers 2..L
  std::vector<double> rates_event;   ///< layers 2..L
  std::size_t steps = 0;
  double e_mac = 0.0;
  double e_ac = 0.0;
  double e_direct = 0.0;
  double e_ttfs = 0.0;
  double first_layer_direct = 0.0;
  double first_layer_ttfs = 0.0;
  double savings_pct = 0.0;
};

/// E_direct = e_mac M_1 + T e_ac sum_{l>=2} r_l^dir M_l
/// E_TTFS   = e_ac  M_1 + T e_ac sum_{l>=2} r_l^evt M_l
EnergyReport estimate_energy(std::span<const double> sops, std::span<const double> rates_direct,
                             std::span<const double> rates_event, std::size_t steps, double e_mac = 4.6e-12,
                             double e_ac = 0.9e-12);

/// Rate of the spikes entering each compute layer after the first, taken from
/// the LIF layer that feeds it.
std::vector<double> input_rates_for_compute_layers(const SpikingNetwork& net, const FiringRates& rates);

enum class CostMode { Tsf, Skd };

struct CostLedger {
  CostMode mode = CostMode::Skd;
  double f_evt = 0.0;
  double f_dir = 0.0;
  double tsf_cost = 0.0;
  double skd_cost = 0.0;
  double total = 0.0;
  double overhead_pct = 0.0;
};

CostLedger cost_from_flops(double f_evt, double f_dir, CostMode mode);
/// Forward FLOPs as 2 M_l per layer per step (direct evaluates layer 1 once), backward as 2x forward.
CostLedger training_cost(const ArchitectureSpec& spec, std::size_t steps, CostMode mode);
CostMode parse_cost_mode(std::string_view name);
std::string cost_mode_name(CostMode mode);

}  // namespace d2e
