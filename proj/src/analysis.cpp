#include "d2e/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "d2e/autodiff.hpp"

namespace d2e {

namespace {

void require_table(const Tensor& probs, std::size_t rows, const char* who) {
  if (probs.rank() != 2 || probs.dim(0) != rows) {
    throw DimensionError(std::string(who) + ": table " + shape_str(probs.shape()) + " for " + std::to_string(rows) +
                         " samples");
  }
}

EncoderConfig direct_like(const EncoderConfig& enc) {
  EncoderConfig d;
  d.kind = EncoderKind::Direct;
  d.steps = enc.steps;
  return d;
}

}  // namespace

double soft_accuracy(const Tensor& probs, std::span<const int> labels) {
  if (labels.empty()) throw std::invalid_argument("soft_accuracy: empty dataset");
  require_table(probs, labels.size(), "soft_accuracy");
  const std::size_t cols = probs.dim(1);
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) acc += probs[i * cols + static_cast<std::size_t>(labels[i])];
  return acc / static_cast<double>(labels.size());
}

double soft_accuracy(const Tensor& probs, const Tensor& label_dist) {
  if (probs.shape() != label_dist.shape() || probs.rank() != 2) {
    throw DimensionError("soft_accuracy: " + shape_str(probs.shape()) + " vs " + shape_str(label_dist.shape()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.numel(); ++i) acc += probs[i] * label_dist[i];
  return acc / static_cast<double>(probs.dim(0));
}

double hard_accuracy(const Tensor& probs, std::span<const int> labels) {
  if (labels.empty()) throw std::invalid_argument("hard_accuracy: empty dataset");
  require_table(probs, labels.size(), "hard_accuracy");
  const std::size_t cols = probs.dim(1);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = probs.data().subspan(i * cols, cols);
    // ties resolve to the lowest index
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    correct += best == static_cast<std::size_t>(labels[i]);
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<double> row_kl(const Tensor& p, const Tensor& q) {
  if (p.shape() != q.shape() || p.rank() != 2) {
    throw DimensionError("row_kl: " + shape_str(p.shape()) + " vs " + shape_str(q.shape()));
  }
  const std::size_t cols = p.dim(1);
  std::vector<double> out(p.dim(0), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = kl_exact(p.data().subspan(i * cols, cols), q.data().subspan(i * cols, cols));
  }
  return out;
}

double mean_kl(const Tensor& p, const Tensor& q) {
  const auto rows = row_kl(p, q);
  double s = 0.0;
  for (double v : rows) s += v;
  return s / static_cast<double>(rows.size());
}

double soft_accuracy(const SpikingNetwork& net, const Dataset& ds, const EncoderConfig& enc) {
  if (ds.empty()) throw std::invalid_argument("soft_accuracy: empty dataset");
  return soft_accuracy(dataset_probs(net, ds, enc), ds.labels);
}

double expected_kl(const SpikingNetwork& teacher, const SpikingNetwork& student, const Dataset& ds,
                   const EncoderConfig& teacher_enc, const EncoderConfig& student_enc) {
  if (ds.empty()) throw std::invalid_argument("expected_kl: empty dataset");
  return mean_kl(dataset_probs(teacher, ds, teacher_enc), dataset_probs(student, ds, student_enc));
}

double tv_exact(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_exact: support sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

double kl_exact(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_exact: support sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * (std::log(p[i]) - std::log(std::max(q[i], kLogFloor)));
  }
  return s;
}

PinskerResult pinsker_check(std::span<const double> p, std::span<const double> q) {
  PinskerResult r;
  r.tv = tv_exact(p, q);
  r.bound = std::sqrt(std::max(0.0, kl_exact(p, q)) / 2.0);
  // Allow for rounding in the two sums when both sides coincide.
  r.holds = r.tv <= r.bound + 1e-12;
  return r;
}

std::string tv_mode_name(TvMode mode) {
  switch (mode) {
    case TvMode::Exact: return "exact";
    case TvMode::FittedConstant: return "fitted_constant";
    case TvMode::FitFromTrajectory: return "fit_from_trajectory";
  }
  return "unknown";
}

TvMode parse_tv_mode(std::string_view name) {
  if (name == "exact") return TvMode::Exact;
  if (name == "fitted_constant") return TvMode::FittedConstant;
  if (name == "fit_from_trajectory") return TvMode::FitFromTrajectory;
  throw std::invalid_argument("unknown tv mode '" + std::string(name) + "' (expected exact|fitted_constant|fit_from_trajectory)");
}

BoundRecord make_bound_record(std::size_t epoch, double kl_mean, double tv, double acc_gap) {
  BoundRecord r;
  r.epoch = epoch;
  r.kl_mean = kl_mean;
  r.tv_estimate = tv;
  r.acc_gap = acc_gap;
  r.rhs = std::sqrt(std::max(0.0, kl_mean) / 2.0) + 2.0 * tv;
  r.holds = r.rhs >= acc_gap;
  return r;
}

double input_tv_exact(const Dataset& ds, const EncoderConfig& event_enc, std::size_t network_channels) {
  if (ds.empty()) throw std::invalid_argument("input_tv_exact: empty dataset");
  for (const auto& img : ds.images) {
    for (double v : img.data()) {
      if (v != 0.0 && v != 1.0) {
        throw UnsupportedModeError("exact TV needs a finite input space; dataset has non-binary intensity " +
                                   std::to_string(v));
      }
    }
  }
  // Empirical distributions over exact encoded sequences of the two codings.
  std::map<std::vector<double>, double> direct, event;
  const double w = 1.0 / static_cast<double>(ds.size());
  const EncoderConfig direct_enc = direct_like(event_enc);
  for (const auto& img : ds.images) {
    direct[encode(direct_enc, img, network_channels).vec()] += w;
    event[encode(event_enc, img, network_channels).vec()] += w;
  }
  std::set<std::vector<double>> support;
  for (const auto& [k, v] : direct) support.insert(k);
  for (const auto& [k, v] : event) support.insert(k);
  std::vector<double> p, q;
  for (const auto& k : support) {
    p.push_back(direct.contains(k) ? direct[k] : 0.0);
    q.push_back(event.contains(k) ? event[k] : 0.0);
  }
  return tv_exact(p, q);
}

double fit_tv_constant(std::span<const double> kl_means, std::span<const double> gaps) {
  if (kl_means.size() != gaps.size()) throw std::invalid_argument("fit_tv_constant: series lengths differ");
  double c = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    c = std::max(c, (gaps[i] - std::sqrt(std::max(0.0, kl_means[i]) / 2.0)) / 2.0);
  }
  return c;
}

BoundRecord theorem1_report(const SpikingNetwork& teacher, const SpikingNetwork& student, const Dataset& ds,
                            const EncoderConfig& event_enc, TvMode mode, double tv_constant) {
  if (ds.empty()) throw std::invalid_argument("theorem1_report: empty dataset");
  const Tensor teacher_probs = dataset_probs(teacher, ds, direct_like(event_enc));
  const Tensor student_probs = dataset_probs(student, ds, event_enc);
  const double kl = mean_kl(teacher_probs, student_probs);
  const double gap = std::abs(soft_accuracy(teacher_probs, ds.labels) - soft_accuracy(student_probs, ds.labels));
  double tv = tv_constant;
  switch (mode) {
    case TvMode::Exact: tv = input_tv_exact(ds, event_enc, student.input_channels()); break;
    case TvMode::FittedConstant: break;
    case TvMode::FitFromTrajectory: {
      const double k[] = {kl};
      const double g[] = {gap};
      tv = fit_tv_constant(k, g);
      break;
    }
  }
  return make_bound_record(0, kl, tv, gap);
}

BoundReport bound_trajectory(const TrainLog& log, TvMode mode, double tv_value) {
  std::vector<EpochRecord> rows;
  if (log.initial) rows.push_back(*log.initial);
  rows.insert(rows.end(), log.records.begin(), log.records.end());
  std::vector<double> kls, gaps;
  for (const auto& r : rows) {
    kls.push_back(r.kl_mean);
    gaps.push_back(std::abs(log.reference_acc_soft - r.acc_evt_soft));
  }
  const double tv = mode == TvMode::FitFromTrajectory ? fit_tv_constant(kls, gaps) : tv_value;
  BoundReport report;
  report.tv_mode = mode;
  for (std::size_t i = 0; i < rows.size(); ++i) report.records.push_back(make_bound_record(rows[i].epoch, kls[i], tv, gaps[i]));
  return report;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("pearson: need two equal-length series of at least 2 points");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("pearson: constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double capacity_bound(std::size_t pixels, std::size_t steps) {
  if (pixels == 0 || steps == 0) throw std::invalid_argument("capacity_bound: d and T must be >= 1");
  return static_cast<double>(pixels) * std::log2(static_cast<double>(steps) + 1.0);
}

std::size_t count_ttfs_codewords(std::size_t pixels, std::size_t steps, std::size_t levels) {
  if (pixels == 0 || levels < 2) throw std::invalid_argument("count_ttfs_codewords: need d >= 1 and >= 2 levels");
  double combos = std::pow(static_cast<double>(levels), static_cast<double>(pixels));
  if (combos > 1e8) throw std::invalid_argument("count_ttfs_codewords: enumeration too large");
  std::set<std::vector<double>> words;
  std::vector<std::size_t> digits(pixels, 0);
  Tensor img(Shape{1, 1, pixels});
  while (true) {
    for (std::size_t i = 0; i < pixels; ++i) img[i] = static_cast<double>(digits[i]) / static_cast<double>(levels - 1);
    words.insert(encode_ttfs(img, steps).vec());
    std::size_t k = 0;
    while (k < pixels && ++digits[k] == levels) digits[k++] = 0;
    if (k == pixels) break;
  }
  return words.size();
}

CollapseStats layer1_collapse_stats(const SpikingNetwork& net, const Dataset& ds, std::size_t steps,
                                    const TtfsOptions& ttfs) {
  if (ds.empty()) throw std::invalid_argument("layer1_collapse_stats: empty dataset");
  const auto spiking = net.spiking_layers();
  if (spiking.empty()) throw std::invalid_argument("layer1_collapse_stats: network has no spiking layer");
  // First parametrised layer, reached through any flatten in front of it.
  std::size_t first = 0;
  while (net.weight_index[first] < 0) ++first;
  const auto& layer = net.spec.layers[first];
  const Tensor& weight = net.params[static_cast<std::size_t>(net.weight_index[first])];

  auto bias_free = [&](const Tensor& input) {  // input [B, C, H, W]
    if (layer.kind == LayerKind::ConvLIF) return conv2d_forward(input, weight, {layer.stride, layer.padding});
    return affine_forward(input.reshaped({input.dim(0), input.numel() / input.dim(0)}), weight, nullptr);
  };

  double direct_sum = 0.0, ttfs_sum = 0.0;
  std::size_t direct_count = 0, ttfs_count = 0;
  for (const auto& img : ds.images) {
    const Tensor x = img.reshaped({1, img.dim(0), img.dim(1), img.dim(2)});
    const Tensor z = bias_free(x);
    direct_sum += z.sum();
    direct_count += z.numel();
    if (steps == 1) {
      // A single step has no temporal spreading: the lone frame is the image itself.
      ttfs_sum += z.sum();
      ttfs_count += z.numel();
      continue;
    }
    const Tensor train = encode_ttfs(img, steps, ttfs);
    for (std::size_t t = 0; t < steps; ++t) {
      const Tensor s = train.slice0(t);
      const Tensor zt = bias_free(s.reshaped({1, s.dim(0), s.dim(1), s.dim(2)}));
      ttfs_sum += zt.sum();
      ttfs_count += zt.numel();
    }
  }
  CollapseStats stats;
  stats.mean_direct = direct_sum / static_cast<double>(direct_count);
  stats.mean_ttfs_per_step = ttfs_sum / static_cast<double>(ttfs_count);
  if (stats.mean_direct != 0.0) stats.ratio = stats.mean_ttfs_per_step / stats.mean_direct;
  return stats;
}

MismatchNorms gradient_mismatch_norm(const SpikingNetwork& net, const Dataset& ds, const EncoderConfig& event_enc) {
  if (ds.empty()) throw std::invalid_argument("gradient_mismatch_norm: empty dataset");
  auto mean_grad_norm = [&](const EncoderConfig& enc) {
    std::vector<Tensor> total;
    for (const auto& p : net.params) total.push_back(Tensor::like(p));
    constexpr std::size_t kBatch = 128;
    for (std::size_t first = 0; first < ds.size(); first += kBatch) {
      const std::size_t count = std::min(kBatch, ds.size() - first);
      Tape tape;
      const auto params = bind_parameters(net, tape, true);
      const auto out = run_unrolled(net, params, encode_range(ds, enc, first, count, net.input_channels()));
      const std::vector<int> labels(ds.labels.begin() + static_cast<std::ptrdiff_t>(first),
                                    ds.labels.begin() + static_cast<std::ptrdiff_t>(first + count));
      const Var loss = cross_entropy(temporal_readout(out.logits), labels);
      tape.backward(loss);
      // batch-mean gradient weighted back to a dataset mean
      const double w = static_cast<double>(count) / static_cast<double>(ds.size());
      for (std::size_t p = 0; p < params.size(); ++p) {
        const Tensor& g = tape.grad(params[p]);
        if (g.empty()) continue;
        for (std::size_t k = 0; k < g.numel(); ++k) total[p][k] += w * g[k];
      }
    }
    double sq = 0.0;
    for (const auto& t : total)
      for (double v : t.data()) sq += v * v;
    return std::sqrt(sq);
  };
  return {mean_grad_norm(event_enc), mean_grad_norm(direct_like(event_enc))};
}

std::vector<SopEntry> count_sops(const ArchitectureSpec& spec) {
  const auto geo = resolve_geometry(spec);
  std::vector<SopEntry> out;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const auto& g = geo[i];
    switch (l.kind) {
      case LayerKind::ConvLIF:
        out.push_back({i, "conv", static_cast<double>(g.in[0]) * static_cast<double>(l.kernel * l.kernel) *
                                      static_cast<double>(g.out[1] * g.out[2]) * static_cast<double>(g.out[0])});
        break;
      case LayerKind::AffineLIF:
      case LayerKind::Readout:
        out.push_back({i, layer_kind_name(l.kind), static_cast<double>(g.in[0]) * static_cast<double>(g.out[0])});
        break;
      default:
        break;
    }
  }
  return out;
}

EnergyReport estimate_energy(std::span<const double> sops, std::span<const double> rates_direct,
                             std::span<const double> rates_event, std::size_t steps, double e_mac, double e_ac) {
  if (sops.empty()) throw std::invalid_argument("estimate_energy: no layers");
  if (rates_direct.size() + 1 != sops.size() || rates_event.size() + 1 != sops.size()) {
    throw std::invalid_argument("estimate_energy: need one rate per layer after the first (" +
                                std::to_string(sops.size() - 1) + ")");
  }
  if (steps == 0) throw std::invalid_argument("estimate_energy: T must be >= 1");
  if (!(e_mac > 0.0) || !(e_ac > 0.0)) throw std::invalid_argument("estimate_energy: energies must be > 0");
  for (double r : rates_direct)
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("estimate_energy: direct rate outside [0,1]");
  for (double r : rates_event)
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("estimate_energy: event rate outside [0,1]");

  EnergyReport rep;
  rep.sops.assign(sops.begin(), sops.end());
  rep.rates_direct.assign(rates_direct.begin(), rates_direct.end());
  rep.rates_event.assign(rates_event.begin(), rates_event.end());
  rep.steps = steps;
  rep.e_mac = e_mac;
  rep.e_ac = e_ac;
  rep.first_layer_direct = e_mac * sops[0];
  rep.first_layer_ttfs = e_ac * sops[0];
  double dir = 0.0, evt = 0.0;
  for (std::size_t l = 1; l < sops.size(); ++l) {
    dir += rates_direct[l - 1] * sops[l];
    evt += rates_event[l - 1] * sops[l];
  }
  const double t = static_cast<double>(steps);
  rep.e_direct = rep.first_layer_direct + t * e_ac * dir;
  rep.e_ttfs = rep.first_layer_ttfs + t * e_ac * evt;
  rep.savings_pct = 100.0 * (rep.e_direct - rep.e_ttfs) / rep.e_direct;
  return rep;
}

std::vector<double> input_rates_for_compute_layers(const SpikingNetwork& net, const FiringRates& rates) {
  std::vector<double> out;
  std::optional<double> last;
  std::size_t spike_slot = 0;
  bool first_compute = true;
  for (const auto& l : net.spec.layers) {
    const bool compute = l.kind == LayerKind::ConvLIF || l.kind == LayerKind::AffineLIF || l.kind == LayerKind::Readout;
    if (compute) {
      if (!first_compute) out.push_back(last.value_or(0.0));
      first_compute = false;
    }
    if (l.kind == LayerKind::ConvLIF || l.kind == LayerKind::AffineLIF) last = rates.per_layer.at(spike_slot++);
  }
  return out;
}

CostLedger cost_from_flops(double f_evt, double f_dir, CostMode mode) {
  CostLedger c;
  c.mode = mode;
  c.f_evt = f_evt;
  c.f_dir = f_dir;
  c.tsf_cost = 3.0 * f_evt;
  c.skd_cost = 3.0 * f_evt + f_dir;
  c.total = mode == CostMode::Tsf ? c.tsf_cost : c.skd_cost;
  c.overhead_pct = 100.0 * (c.skd_cost - c.tsf_cost) / c.tsf_cost;
  return c;
}

CostLedger training_cost(const ArchitectureSpec& spec, std::size_t steps, CostMode mode) {
  const auto sops = count_sops(spec);
  const double t = static_cast<double>(steps);
  double f_evt = 0.0, f_dir = 0.0;
  for (std::size_t l = 0; l < sops.size(); ++l) {
    f_evt += 2.0 * sops[l].sops * t;
    f_dir += 2.0 * sops[l].sops * (l == 0 ? 1.0 : t);
  }
  return cost_from_flops(f_evt, f_dir, mode);
}

CostMode parse_cost_mode(std::string_view name) {
  if (name == "tsf") return CostMode::Tsf;
  if (name == "skd") return CostMode::Skd;
  throw std::invalid_argument("unknown cost mode '" + std::string(name) + "' (expected tsf|skd)");
}

std::string cost_mode_name(CostMode mode) { return mode == CostMode::Tsf ? "tsf" : "skd"; }

}  // namespace d2e
