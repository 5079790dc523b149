#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "d2e/config.hpp"
#include "d2e/dataset.hpp"
#include "d2e/experiments.hpp"
#include "d2e/plot.hpp"
#include "d2e/random.hpp"
#include "d2e/report.hpp"

using namespace d2e;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("d2e_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(D2E_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string field_of(const ConfigMap& map) {
  try {
    build_config(map);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

PlotSpec golden_spec() {
  PlotSpec spec;
  spec.title = "KL vs gap";
  spec.x_label = "epoch";
  spec.left_label = "kl_mean";
  spec.right_label = "acc_gap";
  spec.series.push_back({"kl_mean", {0, 1, 2, 3}, {0.9, 0.6, 0.45, 0.3}, false});
  spec.series.push_back({"acc_gap", {0, 1, 2, 3}, {0.2, 0.12, 0.08, 0.05}, true});
  return spec;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config text parsing") {
    const auto map = parse_config_text("# comment\nseed = 4\n\n transfer.alpha=0.2  # trailing\n");
    CHECK(map.at("seed") == "4");
    CHECK(map.at("transfer.alpha") == "0.2");
    CHECK_THROWS_AS(parse_config_text("seed 4"), ConfigError);
    ConfigMap m = map;
    apply_override(m, "transfer.alpha=0.6");
    CHECK(m.at("transfer.alpha") == "0.6");
    CHECK_THROWS_AS(apply_override(m, "novalue"), ConfigError);
  }

  TEST_CASE("build_config defaults and values") {
    const auto cfg = build_config(parse_config_text("seed = 9\ntransfer.alpha = 0.2\nencoder.steps = 6\n"));
    CHECK(cfg.seed == 9);
    CHECK(cfg.transfer.alpha == 0.2);
    CHECK(cfg.transfer.steps == 6);
    CHECK(cfg.pretrain.steps == 6);
    CHECK(cfg.sweep.alphas.size() == 6);
    CHECK(cfg.energy.e_mac == 4.6e-12);
    CHECK(config_keys().size() > 40);
  }

  TEST_CASE("config errors name the field") {
    CHECK(field_of({{"transfer.alpha", "0.4"}}) == "seed");
    CHECK(field_of({{"seed", "1"}, {"transfer.alpha", "1.5"}}) == "transfer.alpha");
    CHECK(field_of({{"seed", "1"}, {"transfer.alpha", "abc"}}) == "transfer.alpha");
    CHECK(field_of({{"seed", "1"}, {"tranfer.alpha", "0.1"}}) == "tranfer.alpha");
    CHECK(field_of({{"seed", "1"}, {"encoder.kind", "rate"}}) == "encoder.kind");
    CHECK(field_of({{"seed", "1"}, {"lif.tau", "0.5"}}) == "lif.tau");
    CHECK(field_of({{"seed", "1"}, {"sweep.alphas", "0,2"}}) == "sweep.alphas");
    CHECK(field_of({{"seed", "1"}, {"model.arch", "inline"}}) == "model.layers");
    CHECK_NOTHROW(build_config({{"cost.mode", "tsf"}}, false));
  }

  TEST_CASE("number formatting is shortest round-trip") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(1e-12) == "1e-12");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
    CsvTable t({"a", "b"});
    t.row({"1", "2"});
    CHECK(t.str() == "a,b\n1,2\n");
    CHECK_THROWS(t.row({"1"}));
  }

  TEST_CASE("train log CSV has the frozen columns") {
    TrainLog log;
    EpochRecord r;
    r.epoch = 1;
    r.loss = 0.5;
    log.records.push_back(r);
    const std::string csv = train_log_csv(log);
    CHECK(csv.rfind("epoch,loss,ce,distill,acc_dir_soft,acc_dir_hard,acc_evt_soft,acc_evt_hard,kl_mean,lr\n", 0) == 0);
    CHECK(csv.find("1,0.5,0,0,0,0,0,0,0,0\n") != std::string::npos);
  }

  TEST_CASE("dataset file round-trip and layout") {
    const Dataset ds = gen_synthetic(SyntheticKind::Bars, 12, 4);
    const auto bytes = serialize_dataset(ds);
    CHECK(bytes.size() == kDatasetHeaderBytes + 12 * 16 * 16 + 12);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "D2E1");
    const Dataset back = deserialize_dataset(bytes);
    CHECK(back.images == ds.images);
    CHECK(back.labels == ds.labels);
    CHECK(back.classes == 4);

    const fs::path dir = scratch("dataset");
    write_dataset(ds, dir / "a.d2e");
    CHECK(read_dataset(dir / "a.d2e").images == ds.images);

    auto bad = bytes;
    bad.pop_back();
    CHECK_THROWS_AS(deserialize_dataset(bad), DatasetFormatError);
    bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(deserialize_dataset(bad), DatasetFormatError);
    bad = bytes;
    bad.back() = 9;
    CHECK_THROWS_AS(deserialize_dataset(bad), DatasetFormatError);
    CHECK_THROWS_AS(read_dataset(dir / "missing.d2e"), IoError);
  }

  TEST_CASE("synthetic generators") {
    const auto a = serialize_dataset(gen_synthetic(SyntheticKind::TwoBlobs, 200, 5));
    CHECK(a == serialize_dataset(gen_synthetic(SyntheticKind::TwoBlobs, 200, 5)));
    const Dataset blobs = gen_synthetic(SyntheticKind::TwoBlobs, 200, 5);
    int ones = 0;
    for (int l : blobs.labels) ones += l;
    CHECK(ones == 100);
    CHECK_THROWS(gen_synthetic(SyntheticKind::Bars, 3, 0));
    const Dataset noisy = gen_synthetic(SyntheticKind::Bars, 40, 5, {16, 1.0, 0.5});
    CHECK(noisy.images == gen_synthetic(SyntheticKind::Bars, 40, 5).images);
    CHECK(noisy.labels != gen_synthetic(SyntheticKind::Bars, 40, 5).labels);
    const Dataset b4 = gen_synthetic(SyntheticKind::Binary4, 16, 0);
    CHECK(b4.image_shape() == Shape{1, 2, 2});
    for (std::size_t i = 0; i < 16; ++i) {
      const auto& x = b4.images[i];
      CHECK(b4.labels[i] == (static_cast<int>(x[0]) ^ static_cast<int>(x[3])));
    }
  }

  TEST_CASE("a linear probe separates two-blobs") {
    const Dataset train = gen_synthetic(SyntheticKind::TwoBlobs, 200, 1);
    const Dataset test = gen_synthetic(SyntheticKind::TwoBlobs, 200, 2);
    const std::size_t d = 256;
    std::vector<double> w(d, 0.0);
    double b = 0.0;
    for (int epoch = 0; epoch < 30; ++epoch) {
      for (std::size_t i = 0; i < train.size(); ++i) {
        double z = b;
        for (std::size_t k = 0; k < d; ++k) z += w[k] * train.images[i][k];
        const double g = 1.0 / (1.0 + std::exp(-z)) - train.labels[i];
        for (std::size_t k = 0; k < d; ++k) w[k] -= 0.05 * g * train.images[i][k];
        b -= 0.05 * g;
      }
    }
    int correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      double z = b;
      for (std::size_t k = 0; k < d; ++k) z += w[k] * test.images[i][k];
      correct += (z > 0) == (test.labels[i] == 1);
    }
    CHECK(correct >= 180);
  }

  TEST_CASE("svg plots") {
    PlotSpec one;
    one.series.push_back({"s", {1.0}, {2.0}, false});
    const std::string single = render_svg(one);
    CHECK(single.rfind("<svg", 0) == 0);
    CHECK(single.find("<circle") != std::string::npos);
    CHECK(single.find("<circle", single.find("<circle") + 1) == std::string::npos);

    const std::string a = render_svg(golden_spec());
    CHECK(a == render_svg(golden_spec()));
    const std::string golden = slurp(fs::path(D2E_GOLDEN_DIR) / "kl_vs_gap.svg");
    CHECK(a == golden);

    PlotSpec empty;
    CHECK_THROWS(render_svg(empty));
    PlotSpec mismatch;
    mismatch.series.push_back({"m", {1, 2}, {1}, false});
    CHECK_THROWS(render_svg(mismatch));
  }

  TEST_CASE("subcommand artifacts are byte-identical on rerun") {
    ConfigMap map = parse_config_text(
        "seed = 3\ndata.n = 32\ndata.test_n = 16\nencoder.steps = 4\npretrain.epochs = 2\n"
        "transfer.epochs = 2\nsweep.alphas = 0,1\nsweep.seeds = 2\nreport.plots = false\n");
    for (std::string_view sub : {"transfer", "sweep-alpha", "energy"}) {
      const fs::path d1 = scratch("rerun1"), d2 = scratch("rerun2");
      map["output.dir"] = d1.string();
      std::ostringstream sink;
      run_subcommand(sub, build_config(map), sink);
      map["output.dir"] = d2.string();
      run_subcommand(sub, build_config(map), sink);
      std::size_t csvs = 0;
      for (const auto& e : fs::directory_iterator(d1)) {
        if (e.path().extension() != ".csv") continue;
        ++csvs;
        CHECK(slurp(e.path()) == slurp(d2 / e.path().filename()));
      }
      CHECK(csvs > 0);
    }
  }

  TEST_CASE("sweep-alpha emits one row per alpha") {
    ConfigMap map = parse_config_text(
        "seed = 3\ndata.n = 16\ndata.test_n = 8\nencoder.steps = 3\npretrain.epochs = 1\n"
        "transfer.epochs = 1\nsweep.seeds = 1\nreport.plots = false\n");
    const auto sweep = sweep_alpha(build_config(map));
    CHECK(sweep.rows.size() == 6);
    CHECK(sweep.runs.size() == 6);
  }

  TEST_CASE("exit codes") {
    const fs::path dir = scratch("exit");
    const fs::path cfg = dir / "ok.cfg";
    std::ofstream(cfg) << "seed = 1\ndata.n = 16\ndata.test_n = 8\nencoder.steps = 3\n";
    CHECK(run_cli("capacity --d 3072 --T 8 --out " + (dir / "cap").string()) == 0);
    CHECK(run_cli("pretrain --config " + cfg.string() + " --set pretrain.epochs=1 --out " + (dir / "p").string()) == 0);
    CHECK(run_cli("pretrain --config " + cfg.string() + " --set transfer.alpha=2") == 2);
    CHECK(run_cli("pretrain --config " + cfg.string() + " --set bogus.key=1") == 2);
    CHECK(run_cli("pretrain --config " + (dir / "nope.cfg").string()) == 2);
    CHECK(run_cli("frobnicate") == 2);
    // One class only: the readout bias gradient stays near 0.5, so at the
    // largest representable learning rate the second momentum step overflows.
    Dataset mono{1, 4, 4, 2, {}, {}};
    for (int i = 0; i < 8; ++i) {
      mono.images.emplace_back(Shape{1, 4, 4}, 1.0);
      mono.labels.push_back(0);
    }
    write_dataset(mono, dir / "mono.d2e");
    CHECK(run_cli("pretrain --config " + cfg.string() + " --set data.path=" + (dir / "mono.d2e").string() +
                  " --set pretrain.epochs=2 --set pretrain.batch_size=2560 --set pretrain.lr_scale=1.7e308"
                  " --set lif.v_threshold=0.01 --out " + (dir / "div").string()) == 3);
    std::ofstream(dir / "blocker") << "x";
    CHECK(run_cli("cost --out " + (dir / "blocker" / "sub").string()) == 4);
    CHECK(run_cli("pretrain --config " + cfg.string() + " --set data.path=" + (dir / "absent.d2e").string()) == 4);
    CHECK(run_cli("capacity --out " + (dir / "cap2").string() + " --set seed=1") == 0);
    const std::string env = "D2E_THREADS=zero " + std::string(D2E_CLI_PATH) + " capacity >/dev/null 2>&1";
    const int st = std::system(env.c_str());
    CHECK(WEXITSTATUS(st) == 2);
  }
}
