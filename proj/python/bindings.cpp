// Python bindings for the closed-form analysis, encoders, synthetic data and
// the experiment driver.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "d2e/analysis.hpp"
#include "d2e/config.hpp"
#include "d2e/dataset.hpp"
#include "d2e/encoders.hpp"
#include "d2e/errors.hpp"
#include "d2e/experiments.hpp"
#include "d2e/network.hpp"

namespace py = pybind11;
using namespace d2e;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  Array out(t.shape());
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

ArchitectureSpec inline_spec(const std::string& layers, std::size_t channels, std::size_t height, std::size_t width,
                             std::size_t classes) {
  return {"inline", channels, height, width, classes, parse_layer_list(layers)};
}

}  // namespace

PYBIND11_MODULE(_d2e, m) {
  m.doc() = "Direct-to-event spiking network transfer toolkit";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("capacity_bound", &capacity_bound, py::arg("pixels"), py::arg("steps"), "d * log2(T + 1) bits");
  m.def("count_ttfs_codewords", &count_ttfs_codewords, py::arg("pixels"), py::arg("steps"), py::arg("levels") = 256);

  m.def("tv", [](const std::vector<double>& p, const std::vector<double>& q) { return tv_exact(p, q); });
  m.def("kl", [](const std::vector<double>& p, const std::vector<double>& q) { return kl_exact(p, q); });
  m.def("pinsker_check", [](const std::vector<double>& p, const std::vector<double>& q) {
    const PinskerResult r = pinsker_check(p, q);
    return py::dict(py::arg("tv") = r.tv, py::arg("bound") = r.bound, py::arg("holds") = r.holds);
  });

  m.def("ttfs_spike_time", [](double x, std::size_t steps) { return ttfs_spike_time(x, steps); }, py::arg("x"),
        py::arg("steps"));
  m.def("encode_ttfs", [](const Array& img, std::size_t steps) { return to_array(encode_ttfs(to_tensor(img), steps)); },
        py::arg("image"), py::arg("steps"), "[C, H, W] in [0, 1] -> [T, C, H, W] binary spikes");
  m.def("encode_direct",
        [](const Array& img, std::size_t steps) { return to_array(encode_direct(to_tensor(img), steps)); },
        py::arg("image"), py::arg("steps"));
  m.def("encode_dvs", [](const Array& img, std::size_t steps) { return to_array(encode_dvs_sim(to_tensor(img), steps)); },
        py::arg("image"), py::arg("steps"), "[C, H, W] -> [T, 2, H, W] ON/OFF events along a closed triangle path");

  m.def(
      "gen_synthetic",
      [](const std::string& kind, std::size_t n, std::uint64_t seed, std::size_t side, double noise_scale,
         double label_noise) {
        SyntheticOptions opts;
        opts.side = side;
        opts.noise_scale = noise_scale;
        opts.label_noise = label_noise;
        const Dataset ds = gen_synthetic(parse_synthetic_kind(kind), n, seed, opts);
        Array images({ds.size(), ds.channels, ds.height, ds.width});
        double* dst = images.mutable_data();
        for (const auto& img : ds.images) dst = std::copy(img.data().begin(), img.data().end(), dst);
        return py::make_tuple(images, ds.labels);
      },
      py::arg("kind"), py::arg("n"), py::arg("seed"), py::arg("side") = 16, py::arg("noise_scale") = 1.0,
      py::arg("label_noise") = 0.0, "Returns (images [N, C, H, W], labels)");

  m.def(
      "count_sops",
      [](const std::string& layers, std::size_t channels, std::size_t height, std::size_t width, std::size_t classes) {
        std::vector<double> out;
        for (const auto& e : count_sops(inline_spec(layers, channels, height, width, classes))) out.push_back(e.sops);
        return out;
      },
      py::arg("layers"), py::arg("channels"), py::arg("height"), py::arg("width"), py::arg("classes"),
      "SOPs per compute layer of an inline layer list, e.g. 'conv:64:3:1:1,flatten,readout'");

  m.def(
      "estimate_energy",
      [](const std::vector<double>& sops, const std::vector<double>& rates_direct,
         const std::vector<double>& rates_event, std::size_t steps, double e_mac, double e_ac) {
        const EnergyReport r = estimate_energy(sops, rates_direct, rates_event, steps, e_mac, e_ac);
        return py::dict(py::arg("e_direct") = r.e_direct, py::arg("e_ttfs") = r.e_ttfs,
                        py::arg("savings_pct") = r.savings_pct);
      },
      py::arg("sops"), py::arg("rates_direct"), py::arg("rates_event"), py::arg("steps"), py::arg("e_mac") = 4.6e-12,
      py::arg("e_ac") = 0.9e-12);

  m.def(
      "cost_from_flops",
      [](double f_evt, double f_dir, const std::string& mode) {
        const CostLedger c = cost_from_flops(f_evt, f_dir, parse_cost_mode(mode));
        return py::dict(py::arg("tsf_cost") = c.tsf_cost, py::arg("skd_cost") = c.skd_cost, py::arg("total") = c.total,
                        py::arg("overhead_pct") = c.overhead_pct);
      },
      py::arg("f_evt"), py::arg("f_dir"), py::arg("mode") = "skd");

  m.def(
      "run_subcommand",
      [](const std::string& name, const std::string& config, const std::vector<std::string>& overrides,
         const std::string& out_dir) {
        ConfigMap map;
        if (!config.empty()) map = load_config_file(config);
        for (const auto& o : overrides) apply_override(map, o);
        ExperimentConfig cfg = build_config(map, name != "capacity" && name != "cost");
        cfg.out_dir = out_dir;
        std::ostringstream summary;
        {
          py::gil_scoped_release release;
          run_subcommand(name, cfg, summary);
        }
        return summary.str();
      },
      py::arg("name"), py::arg("config") = "", py::arg("overrides") = std::vector<std::string>{}, py::arg("out_dir") = "out",
      "Runs one CLI subcommand in-process and returns its printed summary");

  m.attr("subcommands") = std::vector<std::string>(std::begin(kSubcommands), std::end(kSubcommands));
}
