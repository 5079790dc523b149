#include "d2e/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "d2e/plot.hpp"
#include "d2e/random.hpp"
#include "d2e/report.hpp"

namespace d2e {

using nlohmann::ordered_json;

TrainSetup Workbench::setup() const {
  TrainSetup s;
  s.train = &train;
  s.eval = test.empty() ? nullptr : &test;
  s.event_encoder = encoder;
  return s;
}

std::uint64_t stream_seed(std::uint64_t run_seed, SeedStream stream) {
  return derive_seed(run_seed, static_cast<std::uint64_t>(stream));
}

ArchitectureSpec make_architecture(const ExperimentConfig& cfg, std::size_t in_channels, std::size_t side,
                                   std::size_t classes) {
  if (cfg.model.arch == "tiny-mlp") return tiny_mlp(in_channels, side, classes, cfg.model.hidden);
  if (cfg.model.arch == "tiny-conv") return tiny_conv(in_channels, side, classes);
  ArchitectureSpec spec;
  spec.name = "inline";
  spec.in_channels = in_channels;
  spec.height = spec.width = side;
  spec.classes = classes;
  spec.layers = parse_layer_list(cfg.model.layers);
  return spec;
}

Workbench make_workbench(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  Workbench wb;
  wb.seed = run_seed;
  wb.encoder = cfg.encoder;
  if (!cfg.data.path.empty()) {
    wb.train = read_dataset(cfg.data.path);
    if (!cfg.data.test_path.empty()) wb.test = read_dataset(cfg.data.test_path);
  } else {
    try {
      wb.train = gen_synthetic(cfg.data.kind, cfg.data.n, stream_seed(run_seed, SeedStream::TrainData),
                               cfg.data.synthetic);
      if (cfg.data.test_n > 0) {
        SyntheticOptions clean = cfg.data.synthetic;
        clean.label_noise = 0.0;
        wb.test = gen_synthetic(cfg.data.kind, cfg.data.test_n, stream_seed(run_seed, SeedStream::TestData), clean);
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError("data", e.what());
    }
  }
  if (wb.train.height != wb.train.width) throw ConfigError("data", "images must be square");
  if (!wb.test.empty() && wb.test.image_shape() != wb.train.image_shape()) {
    throw ConfigError("data.test_path", "test images differ in shape from the train images");
  }
  const std::size_t channels = encoded_channels(cfg.encoder.kind, wb.train.channels);
  wb.spec = make_architecture(cfg, channels, wb.train.height, wb.train.classes);
  try {
    resolve_geometry(wb.spec);
  } catch (const std::exception& e) {
    throw ConfigError("model", e.what());
  }
  return wb;
}

TrainResult run_pretrain(const ExperimentConfig& cfg, const Workbench& wb) {
  SpikingNetwork net = build(wb.spec, stream_seed(wb.seed, SeedStream::Init), cfg.model.lif);
  TransferConfig p = cfg.pretrain;
  p.seed = stream_seed(wb.seed, SeedStream::Pretrain);
  p.steps = cfg.encoder.steps;
  return pretrain_direct(std::move(net), wb.setup(), p);
}

TrainResult run_transfer(const ExperimentConfig& cfg, const Workbench& wb, const SpikingNetwork& teacher,
                         std::string_view method, double alpha, DistillLoss loss) {
  TransferConfig t = cfg.transfer;
  t.seed = stream_seed(wb.seed, SeedStream::Transfer);
  t.steps = cfg.encoder.steps;
  t.alpha = alpha;
  t.distill_loss = loss;
  if (method == "tsf") return train_tsf(teacher, wb.setup(), t);
  if (method == "skd") return train_skd(teacher, wb.setup(), t);
  throw ConfigError("transfer.method", "expected tsf|skd");
}

namespace {

const EpochRecord& final_record(const TrainLog& log) {
  return log.records.empty() ? *log.initial : log.records.back();
}

}  // namespace

AlphaSweep sweep_alpha(const ExperimentConfig& cfg) {
  AlphaSweep out;
  for (double a : cfg.sweep.alphas) out.rows.push_back({a, 0.0, 0.0, 0.0, cfg.sweep.seeds});
  for (std::size_t s = 0; s < cfg.sweep.seeds; ++s) {
    const Workbench wb = make_workbench(cfg, cfg.seed + s);
    const SpikingNetwork teacher = run_pretrain(cfg, wb).net;
    for (std::size_t i = 0; i < cfg.sweep.alphas.size(); ++i) {
      const double a = cfg.sweep.alphas[i];
      const TrainResult r = run_transfer(cfg, wb, teacher, "skd", a, cfg.transfer.distill_loss);
      const EpochRecord& f = final_record(r.log);
      out.runs.push_back({a, wb.seed, f});
      const double w = 1.0 / static_cast<double>(cfg.sweep.seeds);
      out.rows[i].acc_evt_hard += w * f.acc_evt_hard;
      out.rows[i].acc_evt_soft += w * f.acc_evt_soft;
      out.rows[i].kl_mean += w * f.kl_mean;
    }
  }
  return out;
}

std::vector<LossRow> ablate_loss(const ExperimentConfig& cfg) {
  std::vector<LossRow> rows;
  for (auto l : cfg.sweep.losses) rows.push_back({l, 0.0, 0.0, 0.0, cfg.sweep.seeds});
  for (std::size_t s = 0; s < cfg.sweep.seeds; ++s) {
    const Workbench wb = make_workbench(cfg, cfg.seed + s);
    const SpikingNetwork teacher = run_pretrain(cfg, wb).net;
    for (auto& row : rows) {
      const TrainResult r = run_transfer(cfg, wb, teacher, "skd", cfg.transfer.alpha, row.loss);
      const EpochRecord& f = final_record(r.log);
      const double w = 1.0 / static_cast<double>(cfg.sweep.seeds);
      row.acc_evt_hard += w * f.acc_evt_hard;
      row.acc_evt_soft += w * f.acc_evt_soft;
      row.forward_kl += w * f.kl_mean;
    }
  }
  return rows;
}

BoundTrace bound_trace(const ExperimentConfig& cfg) {
  const Workbench wb = make_workbench(cfg, cfg.seed);
  const SpikingNetwork teacher = run_pretrain(cfg, wb).net;
  BoundTrace trace;
  trace.log = run_transfer(cfg, wb, teacher, "skd", cfg.transfer.alpha, cfg.transfer.distill_loss).log;
  double tv = cfg.bound.tv_constant;
  if (cfg.bound.tv_mode == TvMode::Exact) {
    try {
      tv = input_tv_exact(wb.eval(), wb.encoder, wb.spec.in_channels);
    } catch (const UnsupportedModeError& e) {
      throw ConfigError("bound.tv_mode", e.what());
    }
  }
  trace.report = bound_trajectory(trace.log, cfg.bound.tv_mode, tv);
  std::vector<double> kl, gap;
  for (const auto& r : trace.report.records) {
    if (r.epoch == 0) continue;  // correlation over training epochs only
    kl.push_back(r.kl_mean);
    gap.push_back(r.acc_gap);
  }
  try {
    trace.pearson_r = pearson(kl, gap);
    trace.pearson_defined = true;
  } catch (const std::invalid_argument&) {
    trace.pearson_defined = false;
  }
  return trace;
}

EnergyResult energy_experiment(const ExperimentConfig& cfg) {
  const Workbench wb = make_workbench(cfg, cfg.seed);
  const SpikingNetwork teacher = run_pretrain(cfg, wb).net;
  const SpikingNetwork student =
      cfg.transfer.epochs == 0
          ? teacher
          : run_transfer(cfg, wb, teacher, cfg.method, cfg.transfer.alpha, cfg.transfer.distill_loss).net;
  EncoderConfig direct;
  direct.kind = EncoderKind::Direct;
  direct.steps = cfg.encoder.steps;
  const auto r_dir = input_rates_for_compute_layers(teacher, firing_rates(teacher, wb.eval(), direct));
  const auto r_evt = input_rates_for_compute_layers(student, firing_rates(student, wb.eval(), wb.encoder));
  EnergyResult res;
  res.layers = count_sops(wb.spec);
  std::vector<double> sops;
  for (const auto& l : res.layers) sops.push_back(l.sops);
  res.report = estimate_energy(sops, r_dir, r_evt, cfg.encoder.steps, cfg.energy.e_mac, cfg.energy.e_ac);
  return res;
}

CostLedger cost_experiment(const ExperimentConfig& cfg) {
  if (cfg.cost.f_evt.has_value() != cfg.cost.f_dir.has_value()) {
    throw ConfigError(cfg.cost.f_evt ? "cost.f_dir" : "cost.f_evt", "cost.f_evt and cost.f_dir must be set together");
  }
  if (cfg.cost.f_evt) {
    if (!(*cfg.cost.f_evt > 0.0) || !(*cfg.cost.f_dir > 0.0)) throw ConfigError("cost.f_evt", "FLOPs must be > 0");
    return cost_from_flops(*cfg.cost.f_evt, *cfg.cost.f_dir, cfg.cost.mode);
  }
  const std::size_t channels = encoded_channels(cfg.encoder.kind, 1);
  const std::size_t classes = synthetic_classes(cfg.data.kind);
  const ArchitectureSpec spec = make_architecture(cfg, channels, cfg.data.synthetic.side, classes);
  return training_cost(spec, cfg.encoder.steps, cfg.cost.mode);
}

CapacityResult capacity_experiment(const ExperimentConfig& cfg) {
  CapacityResult r;
  try {
    r.bits = capacity_bound(cfg.capacity.d, cfg.capacity.steps);
    if (cfg.capacity.enumerate_d > 0) {
      r.enumerated =
          count_ttfs_codewords(cfg.capacity.enumerate_d, cfg.capacity.enumerate_steps, cfg.capacity.enumerate_levels);
      r.expected = static_cast<std::size_t>(std::llround(
          std::pow(static_cast<double>(cfg.capacity.enumerate_steps + 1), static_cast<double>(cfg.capacity.enumerate_d))));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("capacity", e.what());
  }
  return r;
}

CollapseResult collapse_experiment(const ExperimentConfig& cfg) {
  Dataset ds;
  if (cfg.collapse.source == "dataset") {
    ds = make_workbench(cfg, cfg.seed).train;
  } else {
    const std::size_t side = cfg.data.synthetic.side;
    ds = Dataset{1, side, side, 2, {}, {}};
    Rng rng(stream_seed(cfg.seed, SeedStream::TrainData));
    for (std::size_t i = 0; i < cfg.collapse.n; ++i) {
      Tensor img(Shape{1, side, side});
      for (auto& v : img.data()) v = rng.uniform();
      ds.images.push_back(std::move(img));
      ds.labels.push_back(static_cast<int>(i % 2));
    }
  }
  if (ds.empty()) throw ConfigError("collapse.n", "must be >= 1");
  const ArchitectureSpec spec = make_architecture(cfg, ds.channels, ds.height, ds.classes);
  const SpikingNetwork net = build(spec, stream_seed(cfg.seed, SeedStream::Init), cfg.model.lif);
  CollapseResult r;
  r.steps = cfg.collapse.steps;
  r.n = ds.size();
  r.stats = layer1_collapse_stats(net, ds, cfg.collapse.steps, cfg.encoder.ttfs);
  return r;
}

MismatchResult mismatch_experiment(const ExperimentConfig& cfg) {
  const Workbench wb = make_workbench(cfg, cfg.seed);
  const TrainResult pre = run_pretrain(cfg, wb);
  MismatchResult r;
  r.norms = gradient_mismatch_norm(pre.net, wb.train, wb.encoder);
  r.terminal_grad_norm = pre.log.records.empty() ? 0.0 : pre.log.records.back().grad_norm;
  return r;
}

// ---------------------------------------------------------------------------
// Artifact writing

namespace {

struct Emitter {
  const ExperimentConfig& cfg;
  std::ostream& out;

  void file(const std::string& name, const std::string& text) const { write_text(cfg.out_dir / name, text); }
  void csv(const std::string& name, const std::string& text) const {
    if (cfg.report.csv) file(name, text);
  }
  void json(const std::string& name, const std::string& text) const {
    if (cfg.report.json) file(name, text);
  }
  void plot(const std::string& name, const PlotSpec& spec) const {
    if (cfg.report.plots) write_svg(spec, cfg.out_dir / name);
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

PlotSpec kl_gap_plot(const BoundReport& report, const std::string& title) {
  PlotSpec p;
  p.title = title;
  p.x_label = "epoch";
  p.left_label = "E[KL] (nats)";
  p.right_label = "soft-accuracy gap";
  PlotSeries kl{"kl_mean", {}, {}, false}, gap{"acc_gap", {}, {}, true};
  for (const auto& r : report.records) {
    kl.x.push_back(static_cast<double>(r.epoch));
    kl.y.push_back(r.kl_mean);
    gap.x.push_back(static_cast<double>(r.epoch));
    gap.y.push_back(r.acc_gap);
  }
  p.series = {kl, gap};
  return p;
}

PlotSpec tightness_plot(const BoundReport& report) {
  PlotSpec p;
  p.title = "bound tightness (" + tv_mode_name(report.tv_mode) + ")";
  p.x_label = "epoch";
  p.left_label = "soft-accuracy units";
  PlotSeries rhs{"rhs", {}, {}, false}, gap{"acc_gap", {}, {}, false};
  for (const auto& r : report.records) {
    rhs.x.push_back(static_cast<double>(r.epoch));
    rhs.y.push_back(r.rhs);
    gap.x.push_back(static_cast<double>(r.epoch));
    gap.y.push_back(r.acc_gap);
  }
  p.series = {rhs, gap};
  return p;
}

PlotSpec accuracy_plot(const TrainLog& log, const std::string& title) {
  PlotSpec p;
  p.title = title;
  p.x_label = "epoch";
  p.left_label = "soft accuracy";
  PlotSeries dir{"acc_dir_soft", {}, {}, false}, evt{"acc_evt_soft", {}, {}, false};
  auto add = [&](const EpochRecord& r) {
    dir.x.push_back(static_cast<double>(r.epoch));
    dir.y.push_back(r.acc_dir_soft);
    evt.x.push_back(static_cast<double>(r.epoch));
    evt.y.push_back(r.acc_evt_soft);
  };
  if (log.initial) add(*log.initial);
  for (const auto& r : log.records) add(r);
  p.series = {dir, evt};
  return p;
}

void emit_train_log(const Emitter& e, const TrainLog& log, const std::string& stem) {
  e.csv(stem + ".csv", train_log_csv(log));
  e.json(stem + ".json", train_log_json(log));
}

}  // namespace

void run_subcommand(std::string_view name, const ExperimentConfig& cfg, std::ostream& out) {
  const Emitter e{cfg, out};
  if (name == "pretrain") {
    const Workbench wb = make_workbench(cfg, cfg.seed);
    const TrainResult r = run_pretrain(cfg, wb);
    emit_train_log(e, r.log, "train_log");
    std::filesystem::create_directories(cfg.out_dir);
    write_parameters(r.net, (cfg.out_dir / "teacher.d2ew").string());
    e.plot("accuracy.svg", accuracy_plot(r.log, "direct pretraining"));
    const EpochRecord& f = final_record(r.log);
    out << "pretrain: epochs=" << r.log.records.size() << " acc_dir_hard=" << fmt(f.acc_dir_hard)
        << " acc_evt_hard=" << fmt(f.acc_evt_hard) << " kl_mean=" << fmt(f.kl_mean) << "\n";
  } else if (name == "transfer") {
    const Workbench wb = make_workbench(cfg, cfg.seed);
    const SpikingNetwork teacher = run_pretrain(cfg, wb).net;
    const TrainResult r = run_transfer(cfg, wb, teacher, cfg.method, cfg.transfer.alpha, cfg.transfer.distill_loss);
    emit_train_log(e, r.log, "train_log");
    std::filesystem::create_directories(cfg.out_dir);
    write_parameters(r.net, (cfg.out_dir / "student.d2ew").string());
    e.plot("kl_vs_gap.svg", kl_gap_plot(bound_trajectory(r.log, TvMode::FittedConstant, cfg.bound.tv_constant),
                                        cfg.method + " KL vs gap"));
    const EpochRecord& f = final_record(r.log);
    out << "transfer(" << cfg.method << "): acc_evt_hard " << fmt(r.log.initial->acc_evt_hard) << " -> "
        << fmt(f.acc_evt_hard) << ", kl_mean " << fmt(r.log.initial->kl_mean) << " -> " << fmt(f.kl_mean) << "\n";
  } else if (name == "sweep-alpha") {
    const AlphaSweep s = sweep_alpha(cfg);
    CsvTable t({"alpha", "acc_evt_hard", "acc_evt_soft", "kl_mean", "seeds"});
    CsvTable runs({"alpha", "seed", "acc_evt_hard", "acc_evt_soft", "kl_mean"});
    ordered_json j = ordered_json::array();
    PlotSeries curve{"mean acc_evt_hard", {}, {}, false};
    for (const auto& r : s.rows) {
      t.row({format_number(r.alpha), format_number(r.acc_evt_hard), format_number(r.acc_evt_soft),
             format_number(r.kl_mean), std::to_string(r.seeds)});
      j.push_back({{"alpha", r.alpha},
                   {"acc_evt_hard", r.acc_evt_hard},
                   {"acc_evt_soft", r.acc_evt_soft},
                   {"kl_mean", r.kl_mean},
                   {"seeds", r.seeds}});
      curve.x.push_back(r.alpha);
      curve.y.push_back(r.acc_evt_hard);
      out << "alpha=" << fmt(r.alpha, 1) << " acc_evt_hard=" << fmt(r.acc_evt_hard) << " kl_mean=" << fmt(r.kl_mean)
          << "\n";
    }
    for (const auto& r : s.runs) {
      runs.row({format_number(r.alpha), std::to_string(r.seed), format_number(r.final.acc_evt_hard),
                format_number(r.final.acc_evt_soft), format_number(r.final.kl_mean)});
    }
    e.csv("sweep_alpha.csv", t.str());
    e.csv("sweep_alpha_runs.csv", runs.str());
    e.json("sweep_alpha.json", j.dump(2) + "\n");
    PlotSpec p;
    p.title = "alpha sweep";
    p.x_label = "alpha";
    p.left_label = "event hard accuracy";
    p.series = {curve};
    e.plot("alpha_curve.svg", p);
  } else if (name == "ablate-loss") {
    const auto rows = ablate_loss(cfg);
    CsvTable t({"loss", "acc_evt_hard", "acc_evt_soft", "forward_kl", "seeds"});
    ordered_json j = ordered_json::array();
    for (const auto& r : rows) {
      t.row({distill_loss_name(r.loss), format_number(r.acc_evt_hard), format_number(r.acc_evt_soft),
             format_number(r.forward_kl), std::to_string(r.seeds)});
      j.push_back({{"loss", distill_loss_name(r.loss)},
                   {"acc_evt_hard", r.acc_evt_hard},
                   {"acc_evt_soft", r.acc_evt_soft},
                   {"forward_kl", r.forward_kl},
                   {"seeds", r.seeds}});
      out << distill_loss_name(r.loss) << ": acc_evt_hard=" << fmt(r.acc_evt_hard)
          << " forward_kl=" << fmt(r.forward_kl) << "\n";
    }
    e.csv("ablate_loss.csv", t.str());
    e.json("ablate_loss.json", j.dump(2) + "\n");
  } else if (name == "bound-trace") {
    const BoundTrace tr = bound_trace(cfg);
    emit_train_log(e, tr.log, "train_log");
    e.csv("bound_report.csv", bound_report_csv(tr.report));
    e.json("bound_report.json", bound_report_json(tr.report));
    ordered_json summary{{"tv_mode", tv_mode_name(tr.report.tv_mode)},
                         {"tv_estimate", tr.report.records.empty() ? 0.0 : tr.report.records.front().tv_estimate},
                         {"pearson_kl_gap", tr.pearson_defined ? ordered_json(tr.pearson_r) : ordered_json(nullptr)},
                         {"violations", 0}};
    std::size_t violations = 0;
    for (const auto& r : tr.report.records) violations += !r.holds;
    summary["violations"] = violations;
    e.json("bound_summary.json", summary.dump(2) + "\n");
    e.plot("kl_vs_gap.svg", kl_gap_plot(tr.report, "KL vs soft-accuracy gap"));
    e.plot("bound_tightness.svg", tightness_plot(tr.report));
    out << "bound-trace: epochs=" << tr.log.records.size() << " tv=" << fmt(summary["tv_estimate"].get<double>())
        << " violations=" << violations << " pearson="
        << (tr.pearson_defined ? fmt(tr.pearson_r) : std::string("undefined")) << "\n";
  } else if (name == "energy") {
    const EnergyResult r = energy_experiment(cfg);
    e.csv("energy_layers.csv", energy_layers_csv(r.report, r.layers));
    e.csv("energy.csv", energy_report_csv(r.report));
    e.json("energy.json", energy_report_json(r.report, r.layers));
    out << "energy (constant-dependent): E_direct=" << format_number(r.report.e_direct)
        << " J E_ttfs=" << format_number(r.report.e_ttfs) << " J savings=" << fmt(r.report.savings_pct, 2) << "%\n";
  } else if (name == "cost") {
    const CostLedger c = cost_experiment(cfg);
    e.csv("cost.csv", cost_ledger_csv(c));
    e.json("cost.json", cost_ledger_json(c));
    out << "cost(" << cost_mode_name(c.mode) << "): total=" << format_number(c.total)
        << " overhead=" << fmt(c.overhead_pct, 2) << "% ratio=" << fmt(c.skd_cost / c.tsf_cost, 3) << "\n";
  } else if (name == "capacity") {
    const CapacityResult r = capacity_experiment(cfg);
    CsvTable t({"d", "T", "bits", "enumerate_d", "enumerate_T", "codewords", "expected"});
    t.row({std::to_string(cfg.capacity.d), std::to_string(cfg.capacity.steps), format_number(r.bits),
           std::to_string(cfg.capacity.enumerate_d), std::to_string(cfg.capacity.enumerate_steps),
           std::to_string(r.enumerated), std::to_string(r.expected)});
    e.csv("capacity.csv", t.str());
    e.json("capacity.json", ordered_json{{"d", cfg.capacity.d},
                                         {"T", cfg.capacity.steps},
                                         {"bits", r.bits},
                                         {"codewords", r.enumerated},
                                         {"expected", r.expected}}
                                .dump(2) + "\n");
    out << fmt(r.bits, 2) << "\n";
  } else if (name == "collapse") {
    const CollapseResult r = collapse_experiment(cfg);
    CsvTable t({"T", "n", "mean_direct", "mean_ttfs_per_step", "ratio", "one_over_T"});
    const std::string ratio = r.stats.ratio ? format_number(*r.stats.ratio) : "undefined";
    t.row({std::to_string(r.steps), std::to_string(r.n), format_number(r.stats.mean_direct),
           format_number(r.stats.mean_ttfs_per_step), ratio, format_number(1.0 / static_cast<double>(r.steps))});
    e.csv("collapse.csv", t.str());
    e.json("collapse.json",
           ordered_json{{"T", r.steps},
                        {"n", r.n},
                        {"mean_direct", r.stats.mean_direct},
                        {"mean_ttfs_per_step", r.stats.mean_ttfs_per_step},
                        {"ratio", r.stats.ratio ? ordered_json(*r.stats.ratio) : ordered_json(nullptr)}}
                   .dump(2) + "\n");
    out << "collapse: ratio=" << (r.stats.ratio ? fmt(*r.stats.ratio) : std::string("undefined"))
        << " 1/T=" << fmt(1.0 / static_cast<double>(r.steps)) << "\n";
  } else if (name == "mismatch") {
    const MismatchResult r = mismatch_experiment(cfg);
    CsvTable t({"event_norm", "direct_norm", "terminal_grad_norm"});
    t.row({format_number(r.norms.event_norm), format_number(r.norms.direct_norm),
           format_number(r.terminal_grad_norm)});
    e.csv("mismatch.csv", t.str());
    e.json("mismatch.json", ordered_json{{"event_norm", r.norms.event_norm},
                                         {"direct_norm", r.norms.direct_norm},
                                         {"terminal_grad_norm", r.terminal_grad_norm}}
                                .dump(2) + "\n");
    out << "mismatch: event=" << fmt(r.norms.event_norm, 6) << " direct=" << fmt(r.norms.direct_norm, 6)
        << " terminal=" << fmt(r.terminal_grad_norm, 6) << "\n";
  } else {
    throw ConfigError("subcommand", "unknown subcommand '" + std::string(name) + "'");
  }
}

}  // namespace d2e
