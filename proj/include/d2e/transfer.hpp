#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "d2e/autodiff.hpp"
#include "d2e/dataset.hpp"
#include "d2e/encoders.hpp"
#include "d2e/network.hpp"

namespace d2e {

enum class DistillLoss { ForwardKL, ReverseKL, JensenShannon, MseSoftmax, L1Softmax };

inline constexpr DistillLoss kAllDistillLosses[] = {DistillLoss::ForwardKL, DistillLoss::ReverseKL,
                                                     DistillLoss::JensenShannon, DistillLoss::MseSoftmax,
                                                     DistillLoss::L1Softmax};

DistillLoss parse_distill_loss(std::string_view name);
std::string distill_loss_name(DistillLoss loss);

struct TransferConfig {
  /// Weight of the CE term; the distillation term gets 1 - alpha.
  double alpha = 0.4;
  DistillLoss distill_loss = DistillLoss::ForwardKL;
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  /// Multiplier on the 0.1 * batch / 256 learning-rate rule.
  double lr_scale = 1.0;
  double momentum = 0.9;
  std::size_t warmup_epochs = 0;
  std::uint64_t seed = 0;
  std::size_t steps = 8;
  /// Softmax temperature of the distillation term only.
  double temperature = 1.0;

  void validate() const;
  double base_lr() const { return 0.1 * static_cast<double>(batch_size) / 256.0 * lr_scale; }
};

/// Linear warmup from base/10 to base over warmup_epochs, then
/// base * (1 + cos(pi * progress)) / 2 with progress = (epoch - warmup) / (epochs - warmup).
double lr_schedule(std::size_t epoch, const TransferConfig& cfg);

/// PyTorch-convention Nesterov SGD buffer for one parameter list.
struct MomentumState {
  std::vector<Tensor> buffers;
};

/// buf = mu * buf + g;  p -= lr * (g + mu * buf)
void sgd_step(std::vector<Tensor>& params, std::span<const Tensor> grads, MomentumState& state, double lr,
              double momentum = 0.9);

/// Gradient flows into student only; the teacher side is treated as a constant.
/// Throws std::invalid_argument if a row of either input is not a distribution.
Var distillation_loss(DistillLoss variant, const Var& teacher_probs, const Var& student_probs);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double ce = 0.0;
  double distill = 0.0;
  double acc_dir_soft = 0.0;
  double acc_dir_hard = 0.0;
  double acc_evt_soft = 0.0;
  double acc_evt_hard = 0.0;
  /// E_x KL(reference on direct || model on event)
  double kl_mean = 0.0;
  double lr = 0.0;
  /// Mean minibatch gradient norm over the epoch.
  double grad_norm = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> records;
  /// Evaluation of the starting weights (epoch 0, no loss fields).
  std::optional<EpochRecord> initial;
  /// Soft accuracy of the reference (teacher) network on direct input.
  double reference_acc_soft = 0.0;
};

struct TrainResult {
  SpikingNetwork net;
  TrainLog log;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainHooks {
  /// Called after every optimizer step with the global step index.
  std::function<void(std::size_t, const SpikingNetwork&)> after_step;
};

/// Shared inputs of the training procedures.
struct TrainSetup {
  const Dataset* train = nullptr;
  /// Dataset for the per-epoch metrics; train set when null.
  const Dataset* eval = nullptr;
  /// Event encoder (student input for TSF/SKD, logging-only for pretraining).
  EncoderConfig event_encoder;
  TrainHooks hooks;
};

/// Minimises CE(temporal_readout(f(direct(x))), y).
TrainResult pretrain_direct(SpikingNetwork net, const TrainSetup& setup, const TransferConfig& cfg);

/// Finetunes a copy of the pretrained net on CE over event-coded input.
TrainResult train_tsf(const SpikingNetwork& pretrained, const TrainSetup& setup, const TransferConfig& cfg);

/// Finetunes student on alpha * CE(student(e(x)), y) + (1 - alpha) * D(teacher(direct(x)), student(e(x))).
/// The teacher is never modified.
TrainResult train_skd(const SpikingNetwork& teacher, SpikingNetwork student, const TrainSetup& setup,
                      const TransferConfig& cfg);
TrainResult train_skd(const SpikingNetwork& teacher, const TrainSetup& setup, const TransferConfig& cfg);

/// Metrics of model against reference on a dataset (no training).
EpochRecord evaluate_epoch(const SpikingNetwork& reference, const SpikingNetwork& model, const Dataset& ds,
                           const EncoderConfig& event_encoder);

}  // namespace d2e
