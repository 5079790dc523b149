// Acceptance suite: one PASS/FAIL line per criterion, with the measured values.
// Exit status is 0 when every criterion ran to completion, whatever its verdict;
// pass --strict to also fail on a FAIL verdict. Criterion ids given as
// arguments restrict the run to those criteria. The lines are also written
// to acceptance_report.txt in the working directory.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "d2e/analysis.hpp"
#include "d2e/config.hpp"
#include "d2e/experiments.hpp"
#include "d2e/grad_check.hpp"
#include "d2e/random.hpp"
#include "d2e/transfer.hpp"
#include "oracles.hpp"

using namespace d2e;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

ExperimentConfig load(const std::string& name, const std::vector<std::string>& overrides = {}) {
  ConfigMap map = load_config_file(fs::path(D2E_CONFIG_DIR) / name);
  for (const auto& o : overrides) apply_override(map, o);
  return build_config(map);
}

Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

std::vector<double> random_simplex(std::size_t c, Rng& rng) {
  std::vector<double> p(c);
  double s = 0.0;
  for (auto& v : p) s += (v = -std::log(1.0 - rng.uniform()));
  for (auto& v : p) v /= s;
  return p;
}

// Mean of each length-3 window.
std::vector<double> moving_average3(const std::vector<double>& xs) {
  std::vector<double> out;
  for (std::size_t i = 2; i < xs.size(); ++i) out.push_back((xs[i - 2] + xs[i - 1] + xs[i]) / 3.0);
  return out;
}

// Largest increase between consecutive entries (<= 0 means non-increasing).
double max_rise(const std::vector<double>& xs) {
  double worst = -INFINITY;
  for (std::size_t i = 1; i < xs.size(); ++i) worst = std::max(worst, xs[i] - xs[i - 1]);
  return worst;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(D2E_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

Verdict c1_gradcheck() {
  double worst = 0.0;
  std::size_t checks = 0;
  const LIFParams lif;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(1000 + seed);
    auto track = [&](const ScalarObjective& f, const Tensor& at) {
      worst = std::max(worst, grad_check(f, at, 1e-4).max_relative_error);
      ++checks;
    };

    const Tensor x = random_tensor({3, 5}, rng), b = random_tensor({4}, rng);
    track([&](Tape& t, const Var& w) { return mean(square(affine(t.constant(x), w, t.constant(b)))); },
          random_tensor({4, 5}, rng));

    const Tensor img = random_tensor({2, 2, 6, 6}, rng);
    track([&](Tape& t, const Var& k) { return mean(square(conv2d(t.constant(img), k, {1, 1}))); },
          random_tensor({3, 2, 3, 3}, rng));

    const std::vector<int> labels{0, 2, 1};
    const Tensor q = softmax_rows(random_tensor({3, 3}, rng));
    track([&](Tape&, const Var& z) { return cross_entropy(softmax(z), labels); }, random_tensor({3, 3}, rng, -2, 2));
    track([&](Tape& t, const Var& z) { return kl_divergence(t.constant(q), softmax(z)); },
          random_tensor({3, 3}, rng, -2, 2));
    track([&](Tape& t, const Var& z) { return kl_divergence(softmax(z), t.constant(q)); },
          random_tensor({3, 3}, rng, -2, 2));

    // conv -> pool -> affine -> smooth LIF over T = 3 -> readout -> softmax -> CE + KL
    const Tensor frames = random_tensor({3, 2, 1, 4, 4}, rng, 0.0, 1.0);
    Tensor kernel = random_tensor({2, 1, 3, 3}, rng);
    Tensor w1 = random_tensor({4, 8}, rng, -1.5, 2.5);
    Tensor w2 = random_tensor({3, 4}, rng);
    const Tensor q2 = softmax_rows(random_tensor({2, 3}, rng));
    const std::vector<int> y{1, 2};
    auto composite = [&](Tape& t, const Var& k, const Var& a, const Var& r) {
      LIFLayerState st = lif_initial_state(t, Shape{2, 4}, lif);
      const Var bias = t.constant(Tensor(Shape{4}, 0.2));
      std::vector<Var> spikes;
      for (std::size_t step = 0; step < 3; ++step) {
        const Var c = avg_pool2d(conv2d(t.constant(frames.slice0(step)), k, {1, 1}), 2);
        const Var cur = affine(reshape(c, Shape{2, 8}), a, bias);
        auto res = lif_step(st, scale(cur, 2.0), lif, SpikeMode::Smooth);
        st = res.state;
        spikes.push_back(res.spikes);
      }
      const Var probs = softmax(affine(mean_of(spikes), r, t.constant(Tensor(Shape{3}, 0.0))));
      return add(cross_entropy(probs, y), kl_divergence(t.constant(q2), probs));
    };
    track([&](Tape& t, const Var& k) { return composite(t, k, t.constant(w1), t.constant(w2)); }, kernel);
    track([&](Tape& t, const Var& a) { return composite(t, t.constant(kernel), a, t.constant(w2)); }, w1);
    track([&](Tape& t, const Var& r) { return composite(t, t.constant(kernel), t.constant(w1), r); }, w2);
  }
  return {worst < 1e-4, std::to_string(checks) + " checks over 20 seeds, max rel err " + sci(worst) + " (< 1e-4)"};
}

Verdict c2_bptt_oracle() {
  double worst = 0.0;
  for (double w : {0.4, 1.0, 1.7, 2.6, 3.3, 4.5}) {
    oracle::BpttCase c;
    c.w = w;
    const auto sym = oracle::bptt_symbolic(c);
    const auto tape = oracle::bptt_tape(c);
    worst = std::max({worst, oracle::rel_err(sym.dloss_dw, tape.dloss_dw), oracle::rel_err(sym.loss, tape.loss)});
  }
  return {worst <= 1e-10, "6 weights, max rel err " + sci(worst) + " (<= 1e-10)"};
}

Verdict c3_pinsker() {
  Rng rng(2024);
  std::size_t violations = 0;
  double tightest = INFINITY;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t c = 2 + rng.below(9);
    const auto p = random_simplex(c, rng), q = random_simplex(c, rng);
    const PinskerResult r = pinsker_check(p, q);
    if (!r.holds) ++violations;
    tightest = std::min(tightest, r.bound - r.tv);
  }
  return {violations == 0,
          "10000 pairs, violations " + std::to_string(violations) + ", min slack " + sci(tightest)};
}

Verdict c4_bound_exact() {
  const BoundTrace tr = bound_trace(load("binary4_exact.cfg"));
  std::size_t violations = 0;
  for (const auto& r : tr.report.records)
    if (!r.holds) ++violations;
  const std::size_t epochs = tr.log.records.size();
  const double tv = tr.report.records.empty() ? 0.0 : tr.report.records.front().tv_estimate;
  return {epochs == 30 && violations == 0 && tr.report.tv_mode == TvMode::Exact,
          std::to_string(epochs) + " epochs, exact tv " + fmt(tv) + ", violations " + std::to_string(violations) +
              ", final acc_evt_hard " + fmt(tr.log.records.back().acc_evt_hard)};
}

Verdict c5_trend() {
  const BoundTrace tr = bound_trace(load("bars_skd.cfg"));
  std::vector<double> kl, gap;
  for (const auto& r : tr.report.records) {
    if (r.epoch == 0) continue;
    kl.push_back(r.kl_mean);
    gap.push_back(r.acc_gap);
  }
  constexpr double tol = 1e-3;
  const std::vector<double> kl_tail(kl.end() - 20, kl.end()), gap_tail(gap.end() - 20, gap.end());
  const double rise_kl = max_rise(moving_average3(kl_tail)), rise_gap = max_rise(moving_average3(gap_tail));
  const bool ok = tr.pearson_defined && tr.pearson_r > 0.7 && rise_kl <= tol && rise_gap <= tol;
  return {ok, "pearson " + fmt(tr.pearson_r) + " (> 0.7), kl " + fmt(kl.front()) + " -> " + fmt(kl.back()) +
                  ", max MA3 rise kl " + sci(rise_kl) + " gap " + sci(rise_gap) + " (<= 1e-3)"};
}

Verdict c6_skd_vs_tsf() {
  const ExperimentConfig cfg = load("bars_sweep.cfg");
  std::size_t wins = 0;
  double mean_skd = 0.0, mean_tsf = 0.0;
  std::string per_seed;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Workbench wb = make_workbench(cfg, cfg.seed + s);
    const SpikingNetwork teacher = run_pretrain(cfg, wb).net;
    const double skd =
        run_transfer(cfg, wb, teacher, "skd", 0.4, cfg.transfer.distill_loss).log.records.back().acc_evt_hard;
    const double tsf =
        run_transfer(cfg, wb, teacher, "tsf", 0.4, cfg.transfer.distill_loss).log.records.back().acc_evt_hard;
    if (skd >= tsf) ++wins;
    mean_skd += skd / 5.0;
    mean_tsf += tsf / 5.0;
    per_seed += (per_seed.empty() ? "" : " ") + fmt(skd, 3) + "/" + fmt(tsf, 3);
  }
  const bool ok = wins >= 3 && mean_skd >= mean_tsf - 0.005;
  return {ok, "SKD>=TSF in " + std::to_string(wins) + "/5 seeds [" + per_seed + "], mean " + fmt(mean_skd) +
                  " vs " + fmt(mean_tsf)};
}

Verdict c7_alpha_shape() {
  const AlphaSweep sw = sweep_alpha(load("bars_sweep.cfg", {"sweep.seeds=3"}));
  auto at = [&](double a) {
    for (const auto& r : sw.rows)
      if (std::abs(r.alpha - a) < 1e-12) return r.acc_evt_hard;
    throw std::runtime_error("alpha missing from sweep");
  };
  const double lo = at(0.0), hi = at(1.0), peak = std::max(at(0.2), at(0.4));
  std::string curve;
  for (const auto& r : sw.rows) curve += (curve.empty() ? "" : " ") + fmt(r.alpha, 1) + ":" + fmt(r.acc_evt_hard);
  return {peak > lo && peak > hi, "mean acc_evt_hard over 3 seeds [" + curve + "]"};
}

Verdict c8_alpha1_is_tsf() {
  const ExperimentConfig cfg = load("bars_sweep.cfg");
  const Workbench wb = make_workbench(cfg, cfg.seed);
  const SpikingNetwork teacher = run_pretrain(cfg, wb).net;
  TransferConfig t = cfg.transfer;
  t.seed = stream_seed(wb.seed, SeedStream::Transfer);
  t.steps = cfg.encoder.steps;
  t.epochs = 3;
  std::vector<std::vector<Tensor>> a, b;
  TrainSetup sa = wb.setup(), sb = wb.setup();
  sa.hooks.after_step = [&](std::size_t, const SpikingNetwork& n) { a.push_back(n.params); };
  sb.hooks.after_step = [&](std::size_t, const SpikingNetwork& n) { b.push_back(n.params); };
  t.alpha = 0.3;  // ignored by TSF
  train_tsf(teacher, sa, t);
  t.alpha = 1.0;
  train_skd(teacher, sb, t);
  return {!a.empty() && a == b, std::to_string(a.size()) + " optimizer steps, trajectories " +
                                    (a == b ? "bitwise identical" : "differ")};
}

Verdict c9_loss_ablation() {
  const auto rows = ablate_loss(load("bars_loss_ablation.cfg"));
  const auto best = std::min_element(rows.begin(), rows.end(),
                                     [](const LossRow& x, const LossRow& y) { return x.forward_kl < y.forward_kl; });
  std::string table;
  for (const auto& r : rows) table += (table.empty() ? "" : " ") + distill_loss_name(r.loss) + ":" + fmt(r.forward_kl);
  return {best->loss == DistillLoss::ForwardKL, "converged forward KL [" + table + "]"};
}

Verdict c10_capacity() {
  ExperimentConfig cfg;
  const CapacityResult r = capacity_experiment(cfg);
  const bool bits_ok = std::abs(std::round(r.bits) - 9739.0) <= 0.5;
  const bool enum_ok = r.enumerated == 16 && r.expected == 16;
  return {bits_ok && enum_ok, "capacity(3072, 8) = " + fmt(r.bits, 2) + " bits (target 9738.86, rounds to " +
                                  fmt(std::round(r.bits), 0) + " vs 9739), codewords(d=2, T=3) = " +
                                  std::to_string(r.enumerated)};
}

Verdict c11_collapse() {
  ExperimentConfig cfg;
  cfg.seed = 7;
  cfg.collapse.n = 1000;
  cfg.collapse.steps = 8;
  const CollapseResult r = collapse_experiment(cfg);
  if (!r.stats.ratio) return {false, "direct mean is zero, ratio undefined"};
  const double t = 8.0, ratio = *r.stats.ratio;
  return {ratio >= 0.8 / t && ratio <= 1.2 / t,
          "n " + std::to_string(r.n) + ", ratio " + fmt(ratio) + " (target [" + fmt(0.8 / t) + ", " + fmt(1.2 / t) +
              "])"};
}

Verdict c12_sops() {
  ArchitectureSpec spec{"m1", 3, 32, 32, 10, {{LayerKind::ConvLIF, 64, 3, 1, 1}, {LayerKind::Flatten}, {LayerKind::Readout}}};
  const double m1 = count_sops(spec).front().sops;
  return {m1 == 1769472.0, "M_1 = " + fmt(m1, 0) + " (expected 1769472)"};
}

Verdict c13_energy() {
  const std::vector<double> sops{1769472.0, 3.0e6, 6.5e5, 5120.0};
  const std::vector<double> zero(3, 0.0);
  const double mac = 4.6e-12, ac = 0.9e-12;
  const auto z = estimate_energy(sops, zero, zero, 8, mac, ac);
  const bool identities = z.e_direct == mac * sops[0] && z.e_ttfs == ac * sops[0];

  Rng rng(13);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> ra(3), rb(3), rab(3), ea(3), eb(3), eab(3);
    for (std::size_t i = 0; i < 3; ++i) {
      ra[i] = rng.uniform(0, 0.5);
      rb[i] = rng.uniform(0, 0.5);
      rab[i] = ra[i] + rb[i];
      ea[i] = rng.uniform(0, 0.5);
      eb[i] = rng.uniform(0, 0.5);
      eab[i] = ea[i] + eb[i];
    }
    const auto a = estimate_energy(sops, ra, ea, 8, mac, ac);
    const auto b = estimate_energy(sops, rb, eb, 8, mac, ac);
    const auto ab = estimate_energy(sops, rab, eab, 8, mac, ac);
    // additive in the rates once the rate-free first layer is counted once
    worst = std::max(worst, oracle::rel_err(ab.e_direct + z.e_direct, a.e_direct + b.e_direct));
    worst = std::max(worst, oracle::rel_err(ab.e_ttfs + z.e_ttfs, a.e_ttfs + b.e_ttfs));
    // homogeneous of degree one in the SOP counts
    std::vector<double> twice(sops);
    for (auto& v : twice) v *= 2.0;
    const auto d = estimate_energy(twice, ra, ea, 8, mac, ac);
    worst = std::max(worst, oracle::rel_err(d.e_direct, 2.0 * a.e_direct));
    worst = std::max(worst, oracle::rel_err(d.e_ttfs, 2.0 * a.e_ttfs));
  }
  return {identities && worst < 1e-12, std::string("zero-rate identities ") + (identities ? "exact" : "broken") +
                                           ", linearity max rel err " + sci(worst)};
}

Verdict c14_cost() {
  const auto eq = cost_from_flops(1.0e9, 1.0e9, CostMode::Skd);
  const double ratio = eq.skd_cost / eq.tsf_cost;
  const double table = 1.25e12 / 9.39e11;
  const auto three_sig = [](double v) { return std::round(v * 100.0) / 100.0; };
  const bool ok = std::abs(eq.overhead_pct - 100.0 / 3.0) <= 0.1 && three_sig(ratio) == three_sig(table);
  return {ok, "overhead " + fmt(eq.overhead_pct, 2) + "%, ledger ratio " + fmt(ratio, 3) + " vs reference " +
                  fmt(table, 3)};
}

Verdict c15_determinism() {
  const fs::path root = fs::temp_directory_path() / "d2e_acceptance_determinism";
  fs::remove_all(root);
  const std::string cfg = (fs::path(D2E_CONFIG_DIR) / "bars_skd.cfg").string();
  const std::string small =
      " --set data.n=64 --set data.test_n=64 --set pretrain.epochs=3 --set transfer.epochs=2 --set transfer.warmup_epochs=1"
      " --set sweep.seeds=1"
      " --set sweep.alphas=0.0,1.0 --set collapse.n=100";
  std::size_t compared = 0;
  std::vector<std::string> broken;
  for (std::string_view sub : kSubcommands) {
    const std::string name(sub);
    for (const char* run : {"a", "b"}) {
      const int code = run_cli(name + " --config " + cfg + small + " --out " + (root / run / name).string());
      if (code != 0) broken.push_back(name + " exit " + std::to_string(code));
    }
    if (!fs::is_directory(root / "a" / name)) continue;
    for (const auto& e : fs::directory_iterator(root / "a" / name)) {
      if (e.path().extension() != ".csv") continue;
      ++compared;
      if (slurp(e.path()) != slurp(root / "b" / name / e.path().filename()))
        broken.push_back(name + "/" + e.path().filename().string());
    }
  }
  fs::remove_all(root);
  std::string detail = std::to_string(std::size(kSubcommands)) + " subcommands run twice, " +
                       std::to_string(compared) + " CSVs compared";
  for (const auto& b : broken) detail += ", mismatch " + b;
  return {broken.empty() && compared > 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--strict")
      strict = true;
    else
      only.push_back(std::stoi(arg));
  }
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0 = no runtime limit
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "autodiff finite-difference check", 10, c1_gradcheck},
      {2, "BPTT oracle", 0, c2_bptt_oracle},
      {3, "Pinsker property", 5, c3_pinsker},
      {4, "bound exactness on enumerable inputs", 0, c4_bound_exact},
      {5, "KL and gap trend", 0, c5_trend},
      {6, "SKD >= TSF", 180, c6_skd_vs_tsf},
      {7, "alpha sweep inverted U", 0, c7_alpha_shape},
      {8, "alpha = 1 equals TSF", 0, c8_alpha1_is_tsf},
      {9, "forward KL lowest in loss ablation", 0, c9_loss_ablation},
      {10, "encoding capacity", 0, c10_capacity},
      {11, "layer-1 collapse", 0, c11_collapse},
      {12, "SOP fixture", 0, c12_sops},
      {13, "energy identities", 0, c13_energy},
      {14, "cost ledger", 0, c14_cost},
      {15, "determinism", 0, c15_determinism},
  };

  std::ofstream report("acceptance_report.txt");
  auto emit = [&](const std::string& line) {
    std::cout << line << std::endl;
    report << line << "\n";
  };
  std::size_t passed = 0, errors = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
      ++errors;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      v.pass = false;
      v.detail += ", over the " + fmt(c.budget_s, 0) + " s budget";
    }
    if (v.pass) ++passed;
    emit(std::string(v.pass ? "[PASS]" : "[FAIL]") + " criterion " + std::to_string(c.id) + " (" + c.name +
         "): " + v.detail + " [" + fmt(secs, 2) + " s]");
  }
  emit("acceptance: " + std::to_string(passed) + "/" + std::to_string(ran) + " passed");
  if (errors > 0) return 1;
  return strict && passed != ran ? 1 : 0;
}
