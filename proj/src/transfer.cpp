#include "d2e/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "d2e/analysis.hpp"
#include "d2e/random.hpp"

namespace d2e {

DistillLoss parse_distill_loss(std::string_view name) {
  if (name == "forward_kl") return DistillLoss::ForwardKL;
  if (name == "reverse_kl") return DistillLoss::ReverseKL;
  if (name == "jensen_shannon") return DistillLoss::JensenShannon;
  if (name == "mse_softmax") return DistillLoss::MseSoftmax;
  if (name == "l1_softmax") return DistillLoss::L1Softmax;
  throw std::invalid_argument("unknown distillation loss '" + std::string(name) +
                              "' (expected forward_kl|reverse_kl|jensen_shannon|mse_softmax|l1_softmax)");
}

std::string distill_loss_name(DistillLoss loss) {
  switch (loss) {
    case DistillLoss::ForwardKL: return "forward_kl";
    case DistillLoss::ReverseKL: return "reverse_kl";
    case DistillLoss::JensenShannon: return "jensen_shannon";
    case DistillLoss::MseSoftmax: return "mse_softmax";
    case DistillLoss::L1Softmax: return "l1_softmax";
  }
  return "unknown";
}

void TransferConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("transfer.alpha must lie in [0,1]");
  if (batch_size == 0) throw std::invalid_argument("transfer.batch_size must be >= 1");
  if (!(lr_scale > 0.0)) throw std::invalid_argument("transfer.lr_scale must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("transfer.momentum must lie in [0,1)");
  if (steps == 0) throw std::invalid_argument("transfer.T must be >= 1");
  if (!(temperature > 0.0)) throw std::invalid_argument("transfer.temperature must be > 0");
  if (epochs > 0 && warmup_epochs >= epochs) throw std::invalid_argument("transfer.warmup_epochs must be < epochs");
}

double lr_schedule(std::size_t epoch, const TransferConfig& cfg) {
  const double base = cfg.base_lr();
  if (epoch < cfg.warmup_epochs) {
    const double f = static_cast<double>(epoch) / static_cast<double>(cfg.warmup_epochs);
    return base / 10.0 + (base - base / 10.0) * f;
  }
  const std::size_t span = cfg.epochs > cfg.warmup_epochs ? cfg.epochs - cfg.warmup_epochs : 1;
  const double progress = static_cast<double>(epoch - cfg.warmup_epochs) / static_cast<double>(span);
  return std::max(0.0, base * 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(progress, 1.0))));
}

void sgd_step(std::vector<Tensor>& params, std::span<const Tensor> grads, MomentumState& state, double lr,
              double momentum) {
  if (grads.size() != params.size()) throw DimensionError("sgd_step: parameter/gradient count mismatch");
  if (state.buffers.empty()) {
    for (const auto& p : params) state.buffers.push_back(Tensor::like(p));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto& buf = state.buffers[i];
    const auto& g = grads[i];
    if (g.shape() != p.shape() || buf.shape() != p.shape()) {
      throw DimensionError("sgd_step: shape mismatch " + shape_str(p.shape()) + " vs " + shape_str(g.shape()));
    }
    for (std::size_t k = 0; k < p.numel(); ++k) {
      buf[k] = momentum * buf[k] + g[k];
      p[k] -= lr * (g[k] + momentum * buf[k]);
    }
  }
}

namespace {

void require_distribution_rows(const Tensor& t, const char* who) {
  if (t.rank() != 2) throw DimensionError(std::string(who) + ": expected [B x C], got " + shape_str(t.shape()));
  const std::size_t cols = t.dim(1);
  for (std::size_t i = 0; i < t.dim(0); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = t[i * cols + j];
      if (!(v >= 0.0)) throw std::invalid_argument(std::string(who) + ": negative or NaN probability");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-6) {
      throw std::invalid_argument(std::string(who) + ": row " + std::to_string(i) + " sums to " + std::to_string(s));
    }
  }
}

}  // namespace

Var distillation_loss(DistillLoss variant, const Var& teacher_probs, const Var& student_probs) {
  require_distribution_rows(teacher_probs.value(), "distillation_loss teacher");
  require_distribution_rows(student_probs.value(), "distillation_loss student");
  if (teacher_probs.shape() != student_probs.shape()) {
    throw DimensionError("distillation_loss: " + shape_str(teacher_probs.shape()) + " vs " +
                         shape_str(student_probs.shape()));
  }
  const Var p = detach(teacher_probs);
  const Var& q = student_probs;
  switch (variant) {
    case DistillLoss::ForwardKL:
      return kl_divergence(p, q);
    case DistillLoss::ReverseKL:
      return kl_divergence(q, p);
    case DistillLoss::JensenShannon: {
      const Var m = scale(add(p, q), 0.5);
      return add(scale(kl_divergence(p, m), 0.5), scale(kl_divergence(q, m), 0.5));
    }
    case DistillLoss::MseSoftmax:
      return mean(square(sub(q, p)));
    case DistillLoss::L1Softmax:
      return mean(abs(sub(q, p)));
  }
  throw std::logic_error("unreachable distillation variant");
}

namespace {

EncoderConfig direct_encoder(std::size_t steps) {
  EncoderConfig enc;
  enc.kind = EncoderKind::Direct;
  enc.steps = steps;
  return enc;
}

/// Mean-over-time logits for every dataset sample under one encoder.
Tensor dataset_mean_logits(const SpikingNetwork& net, const Dataset& ds, const EncoderConfig& enc,
                           std::size_t batch_size = 256) {
  Tensor out(Shape{ds.size(), net.spec.classes});
  for (std::size_t first = 0; first < ds.size(); first += batch_size) {
    const std::size_t count = std::min(batch_size, ds.size() - first);
    const Tensor logits = run_unrolled(net, encode_range(ds, enc, first, count, net.input_channels()));
    const std::size_t steps = logits.dim(0), classes = net.spec.classes;
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t k = 0; k < count * classes; ++k) out[first * classes + k] += logits[t * count * classes + k];
    for (std::size_t k = 0; k < count * classes; ++k) out[first * classes + k] /= static_cast<double>(steps);
  }
  return out;
}

Tensor softmax_with_temperature(const Tensor& logits, double temperature) {
  if (temperature == 1.0) return softmax_rows(logits);
  Tensor scaled = logits;
  for (auto& v : scaled.data()) v /= temperature;
  return softmax_rows(scaled);
}

EpochRecord evaluate_against(const Tensor& reference_direct_probs, const SpikingNetwork& model, const Dataset& ds,
                             const EncoderConfig& event_encoder) {
  const Tensor direct = dataset_probs(model, ds, direct_encoder(event_encoder.steps));
  const Tensor event = dataset_probs(model, ds, event_encoder);
  EpochRecord r;
  r.acc_dir_soft = soft_accuracy(direct, ds.labels);
  r.acc_dir_hard = hard_accuracy(direct, ds.labels);
  r.acc_evt_soft = soft_accuracy(event, ds.labels);
  r.acc_evt_hard = hard_accuracy(event, ds.labels);
  r.kl_mean = mean_kl(reference_direct_probs, event);
  return r;
}

enum class Objective { Direct, Event, Skd };

TrainResult train_loop(SpikingNetwork model, const SpikingNetwork* reference, Objective objective,
                       const TrainSetup& setup, const TransferConfig& cfg) {
  cfg.validate();
  if (!setup.train || setup.train->empty()) throw std::invalid_argument("training needs a non-empty dataset");
  const Dataset& train = *setup.train;
  const Dataset& eval = setup.eval ? *setup.eval : train;
  train.validate();
  EncoderConfig event_enc = setup.event_encoder;
  event_enc.steps = cfg.steps;
  const EncoderConfig direct_enc = direct_encoder(cfg.steps);
  const EncoderConfig& input_enc = objective == Objective::Direct ? direct_enc : event_enc;

  TrainResult result{std::move(model), {}};
  SpikingNetwork& net = result.net;
  TrainLog& log = result.log;

  // Frozen teacher outputs depend only on the sample, so they are computed once.
  std::optional<Tensor> teacher_train;
  std::optional<Tensor> reference_eval;
  if (reference) {
    teacher_train = softmax_with_temperature(dataset_mean_logits(*reference, train, direct_enc), cfg.temperature);
    reference_eval = dataset_probs(*reference, eval, direct_enc);
    log.reference_acc_soft = soft_accuracy(*reference_eval, eval.labels);
  }
  auto evaluate = [&](std::size_t epoch) {
    const Tensor ref = reference_eval ? *reference_eval : dataset_probs(net, eval, direct_enc);
    if (!reference) log.reference_acc_soft = soft_accuracy(ref, eval.labels);
    EpochRecord r = evaluate_against(ref, net, eval, event_enc);
    r.epoch = epoch;
    return r;
  };
  log.initial = evaluate(0);
  if (cfg.epochs == 0) return result;

  Rng order_rng(derive_seed(cfg.seed, 0xD47A));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  MomentumState momentum;
  std::size_t global_step = 0;
  const double ce_weight = objective == Objective::Skd ? cfg.alpha : 1.0;
  const double distill_weight = objective == Objective::Skd ? 1.0 - cfg.alpha : 0.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg);
    order_rng.shuffle(order);
    double loss_sum = 0.0, ce_sum = 0.0, distill_sum = 0.0, norm_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - first);
      const std::span<const std::size_t> idx(order.data() + first, count);
      std::vector<int> labels;
      labels.reserve(count);
      for (auto i : idx) labels.push_back(train.labels[i]);

      Tape tape;
      const auto params = bind_parameters(net, tape, true);
      const auto out = run_unrolled(net, params, encode_indices(train, input_enc, idx, net.input_channels()));
      const Var mean_logits = mean_of(out.logits);
      const Var probs = softmax(mean_logits);
      const Var ce = cross_entropy(probs, labels);

      std::optional<Var> distill;
      if (teacher_train) {
        Tensor teacher(Shape{count, net.spec.classes});
        for (std::size_t b = 0; b < count; ++b)
          for (std::size_t c = 0; c < net.spec.classes; ++c)
            teacher[b * net.spec.classes + c] = (*teacher_train)[idx[b] * net.spec.classes + c];
        const Var student = cfg.temperature == 1.0 ? probs : softmax(scale(mean_logits, 1.0 / cfg.temperature));
        distill = distillation_loss(cfg.distill_loss, tape.constant(std::move(teacher)), student);
      }

      Var loss;
      if (distill_weight == 0.0) {
        loss = ce;
      } else if (ce_weight == 0.0) {
        loss = scale(*distill, distill_weight);
      } else {
        loss = add(scale(ce, ce_weight), scale(*distill, distill_weight));
      }
      const double loss_value = loss.value().item();
      if (!std::isfinite(loss_value)) {
        throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch + 1) + ", step " +
                              std::to_string(global_step));
      }
      tape.backward(loss);

      std::vector<Tensor> grads;
      grads.reserve(params.size());
      double sq = 0.0;
      for (std::size_t p = 0; p < params.size(); ++p) {
        const Tensor& g = tape.grad(params[p]);
        grads.push_back(g.empty() ? Tensor::like(net.params[p]) : g);
        for (double v : grads.back().data()) sq += v * v;
      }
      sgd_step(net.params, grads, momentum, lr, cfg.momentum);
      // The clamped loss can stay finite while the weights overflow.
      const bool params_finite =
          std::all_of(net.params.begin(), net.params.end(), [](const Tensor& t) { return t.all_finite(); });
      if (!std::isfinite(sq) || !params_finite) {
        throw DivergenceError((std::isfinite(sq) ? "parameters" : "gradient") +
                              std::string(" became non-finite at epoch ") + std::to_string(epoch + 1) + ", step " +
                              std::to_string(global_step));
      }
      if (setup.hooks.after_step) setup.hooks.after_step(global_step, net);
      ++global_step;

      loss_sum += loss_value;
      ce_sum += ce.value().item();
      distill_sum += distill ? distill->value().item() : 0.0;
      norm_sum += std::sqrt(sq);
      ++batches;
    }
    EpochRecord r = evaluate(epoch + 1);
    const double nb = static_cast<double>(batches);
    r.loss = loss_sum / nb;
    r.ce = ce_sum / nb;
    r.distill = distill_sum / nb;
    r.lr = lr;
    r.grad_norm = norm_sum / nb;
    log.records.push_back(r);
  }
  return result;
}

}  // namespace

EpochRecord evaluate_epoch(const SpikingNetwork& reference, const SpikingNetwork& model, const Dataset& ds,
                           const EncoderConfig& event_encoder) {
  return evaluate_against(dataset_probs(reference, ds, direct_encoder(event_encoder.steps)), model, ds, event_encoder);
}

TrainResult pretrain_direct(SpikingNetwork net, const TrainSetup& setup, const TransferConfig& cfg) {
  return train_loop(std::move(net), nullptr, Objective::Direct, setup, cfg);
}

TrainResult train_tsf(const SpikingNetwork& pretrained, const TrainSetup& setup, const TransferConfig& cfg) {
  return train_loop(pretrained, &pretrained, Objective::Event, setup, cfg);
}

TrainResult train_skd(const SpikingNetwork& teacher, SpikingNetwork student, const TrainSetup& setup,
                      const TransferConfig& cfg) {
  if (student.spec.layers.size() != teacher.spec.layers.size() || student.params.size() != teacher.params.size()) {
    throw std::invalid_argument("train_skd: teacher and student architectures differ");
  }
  for (std::size_t i = 0; i < student.params.size(); ++i) {
    if (student.params[i].shape() != teacher.params[i].shape()) {
      throw std::invalid_argument("train_skd: teacher and student parameter shapes differ");
    }
  }
  return train_loop(std::move(student), &teacher, Objective::Skd, setup, cfg);
}

TrainResult train_skd(const SpikingNetwork& teacher, const TrainSetup& setup, const TransferConfig& cfg) {
  return train_skd(teacher, teacher, setup, cfg);
}

}  // namespace d2e
