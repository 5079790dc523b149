#include "d2e/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "d2e/errors.hpp"
#include "d2e/random.hpp"

namespace d2e {

std::string layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::AffineLIF: return "affine";
    case LayerKind::ConvLIF: return "conv";
    case LayerKind::AvgPool: return "pool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Readout: return "readout";
  }
  return "unknown";
}

ArchitectureSpec tiny_mlp(std::size_t channels, std::size_t side, std::size_t classes, std::size_t hidden) {
  return {"tiny-mlp", channels, side, side, classes,
          {{LayerKind::Flatten}, {LayerKind::AffineLIF, hidden}, {LayerKind::Readout}}};
}

ArchitectureSpec tiny_conv(std::size_t channels, std::size_t side, std::size_t classes) {
  return {"tiny-conv",
          channels,
          side,
          side,
          classes,
          {{LayerKind::ConvLIF, 8, 3, 1, 1},
           {LayerKind::AvgPool, 0, 2},
           {LayerKind::ConvLIF, 16, 3, 1, 1},
           {LayerKind::AvgPool, 0, 2},
           {LayerKind::Flatten},
           {LayerKind::Readout}}};
}

ArchitectureSpec architecture_by_name(std::string_view name, std::size_t channels, std::size_t side,
                                      std::size_t classes) {
  if (name == "tiny-mlp") return tiny_mlp(channels, side, classes);
  if (name == "tiny-conv") return tiny_conv(channels, side, classes);
  throw std::invalid_argument("unknown architecture '" + std::string(name) + "' (expected tiny-mlp|tiny-conv)");
}

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::size_t parse_count(const std::string& field, const std::string& item) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("layer '" + item + "': '" + field + "' is not a non-negative integer");
  }
}

}  // namespace

std::vector<LayerSpec> parse_layer_list(std::string_view text) {
  std::vector<LayerSpec> layers;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;
    const auto f = split(item, ':');
    const auto arg = [&](std::size_t i, std::size_t fallback) {
      return i < f.size() ? parse_count(f[i], item) : fallback;
    };
    LayerSpec l;
    if (f[0] == "affine") {
      if (f.size() != 2) throw std::invalid_argument("layer '" + item + "': expected affine:<width>");
      l = {LayerKind::AffineLIF, arg(1, 0)};
    } else if (f[0] == "conv") {
      if (f.size() < 3 || f.size() > 5) throw std::invalid_argument("layer '" + item + "': expected conv:<C>:<K>[:<stride>[:<pad>]]");
      l = {LayerKind::ConvLIF, arg(1, 0), arg(2, 0), arg(3, 1), arg(4, 0)};
    } else if (f[0] == "pool") {
      l = {LayerKind::AvgPool, 0, arg(1, 2)};
    } else if (f[0] == "flatten") {
      l = {LayerKind::Flatten};
    } else if (f[0] == "readout") {
      l = {LayerKind::Readout};
    } else {
      throw std::invalid_argument("unknown layer type '" + f[0] + "'");
    }
    layers.push_back(l);
  }
  return layers;
}

std::string format_layer_list(std::span<const LayerSpec> layers) {
  std::ostringstream out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (i) out << ',';
    const auto& l = layers[i];
    out << layer_kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::AffineLIF: out << ':' << l.width; break;
      case LayerKind::ConvLIF: out << ':' << l.width << ':' << l.kernel << ':' << l.stride << ':' << l.padding; break;
      case LayerKind::AvgPool: out << ':' << l.kernel; break;
      default: break;
    }
  }
  return out.str();
}

std::vector<LayerGeometry> resolve_geometry(const ArchitectureSpec& spec) {
  auto fail = [&](std::size_t i, const std::string& why) -> GeometryError {
    return GeometryError("layer " + std::to_string(i) + " (" + layer_kind_name(spec.layers[i].kind) + "): " + why);
  };
  if (spec.in_channels == 0 || spec.height == 0 || spec.width == 0) throw GeometryError("input shape must be positive");
  if (spec.classes < 2) throw GeometryError("classifier needs at least 2 classes");
  if (spec.layers.empty() || spec.layers.back().kind != LayerKind::Readout) {
    throw GeometryError("architecture must end with exactly one readout layer");
  }
  std::vector<LayerGeometry> geo;
  Shape cur{spec.in_channels, spec.height, spec.width};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    Shape out;
    switch (l.kind) {
      case LayerKind::ConvLIF: {
        if (cur.size() != 3) throw fail(i, "needs [C x H x W] input, got " + shape_str(cur));
        if (l.width == 0) throw fail(i, "zero output channels");
        try {
          out = {l.width, conv_output_size(cur[1], l.kernel, {l.stride, l.padding}),
                 conv_output_size(cur[2], l.kernel, {l.stride, l.padding})};
        } catch (const GeometryError& e) {
          throw fail(i, e.what());
        }
        break;
      }
      case LayerKind::AvgPool:
        if (cur.size() != 3) throw fail(i, "needs [C x H x W] input, got " + shape_str(cur));
        if (l.kernel == 0 || cur[1] % l.kernel || cur[2] % l.kernel) {
          throw fail(i, "window " + std::to_string(l.kernel) + " does not tile " + shape_str(cur));
        }
        out = {cur[0], cur[1] / l.kernel, cur[2] / l.kernel};
        break;
      case LayerKind::Flatten:
        out = {shape_numel(cur)};
        break;
      case LayerKind::AffineLIF:
        if (cur.size() != 1) throw fail(i, "needs flat input, got " + shape_str(cur));
        if (l.width == 0) throw fail(i, "zero width");
        out = {l.width};
        break;
      case LayerKind::Readout:
        if (i + 1 != spec.layers.size()) throw fail(i, "readout must be the last layer");
        if (cur.size() != 1) throw fail(i, "needs flat input, got " + shape_str(cur));
        out = {spec.classes};
        break;
    }
    geo.push_back({cur, out});
    cur = out;
  }
  return geo;
}

std::size_t SpikingNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.numel();
  return n;
}

std::vector<std::size_t> SpikingNetwork::spiking_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto k = spec.layers[i].kind;
    if (k == LayerKind::AffineLIF || k == LayerKind::ConvLIF) out.push_back(i);
  }
  return out;
}

std::size_t SpikingNetwork::spiking_layer_count() const { return spiking_layers().size(); }

SpikingNetwork build(const ArchitectureSpec& spec, std::uint64_t init_seed, LIFParams lif) {
  lif.validate();
  SpikingNetwork net;
  net.spec = spec;
  net.lif = lif;
  net.geometry = resolve_geometry(spec);
  Rng rng(init_seed);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const auto& g = net.geometry[i];
    Shape wshape;
    std::size_t fan_in = 0, out = 0;
    switch (l.kind) {
      case LayerKind::AffineLIF:
      case LayerKind::Readout:
        out = g.out[0];
        fan_in = g.in[0];
        wshape = {out, fan_in};
        break;
      case LayerKind::ConvLIF:
        out = l.width;
        fan_in = g.in[0] * l.kernel * l.kernel;
        wshape = {out, g.in[0], l.kernel, l.kernel};
        break;
      default:
        net.weight_index.push_back(-1);
        continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor w(wshape);
    for (auto& v : w.data()) v = rng.uniform(-bound, bound);
    net.weight_index.push_back(static_cast<int>(net.params.size()));
    net.params.push_back(std::move(w));
    net.params.emplace_back(Shape{out}, 0.0);
  }
  return net;
}

std::vector<Var> bind_parameters(const SpikingNetwork& net, Tape& tape, bool trainable) {
  std::vector<Var> vars;
  vars.reserve(net.params.size());
  for (const auto& p : net.params) vars.push_back(trainable ? tape.leaf(p) : tape.constant(p));
  return vars;
}

UnrolledOutput run_unrolled(const SpikingNetwork& net, std::span<const Var> params, const Tensor& sequence,
                            RunOptions opts) {
  if (params.size() != net.params.size()) throw std::invalid_argument("run_unrolled: parameter count mismatch");
  Shape sample_in{net.spec.in_channels, net.spec.height, net.spec.width};
  if (sequence.rank() != 5 || Shape(sequence.shape().begin() + 2, sequence.shape().end()) != sample_in) {
    throw DimensionError("run_unrolled: sequence " + shape_str(sequence.shape()) + " does not match [T x B x " +
                         shape_str(sample_in) + "]");
  }
  const std::size_t steps = sequence.dim(0), batch = sequence.dim(1);
  if (steps == 0) throw std::invalid_argument("run_unrolled: empty sequence (T = 0)");
  Tape& tape = params[0].tape();

  UnrolledOutput out;
  const auto spiking = net.spiking_layers();
  out.spike_totals.assign(spiking.size(), 0.0);
  for (auto li : spiking) out.neurons.push_back(shape_numel(net.geometry[li].out));

  std::vector<std::optional<LIFLayerState>> states(net.spec.layers.size());
  for (std::size_t t = 0; t < steps; ++t) {
    Var x = tape.constant(sequence.slice0(t));
    std::size_t spike_slot = 0;
    for (std::size_t li = 0; li < net.spec.layers.size(); ++li) {
      const auto& l = net.spec.layers[li];
      const int wi = net.weight_index[li];
      Var current;
      switch (l.kind) {
        case LayerKind::Flatten:
          x = reshape(x, {batch, shape_numel(net.geometry[li].out)});
          continue;
        case LayerKind::AvgPool:
          x = avg_pool2d(x, l.kernel);
          continue;
        case LayerKind::Readout:
          x = affine(x, params[static_cast<std::size_t>(wi)], params[static_cast<std::size_t>(wi) + 1]);
          continue;
        case LayerKind::AffineLIF:
          current = affine(x, params[static_cast<std::size_t>(wi)], params[static_cast<std::size_t>(wi) + 1]);
          break;
        case LayerKind::ConvLIF:
          current = add_channel_bias(conv2d(x, params[static_cast<std::size_t>(wi)], {l.stride, l.padding}),
                                     params[static_cast<std::size_t>(wi) + 1]);
          break;
      }
      if (spike_slot == 0) out.first_layer_current.push_back(current);
      if (!states[li]) states[li] = lif_initial_state(tape, current.shape(), net.lif);
      auto step = lif_step(*states[li], current, net.lif, opts.mode);
      states[li] = step.state;
      out.spike_totals[spike_slot++] += step.spikes.value().sum();
      x = step.spikes;
    }
    out.logits.push_back(x);
  }
  return out;
}

Tensor run_unrolled(const SpikingNetwork& net, const Tensor& sequence) {
  Tape tape;
  tape.set_grad_enabled(false);
  const auto params = bind_parameters(net, tape, false);
  const auto out = run_unrolled(net, params, sequence);
  std::vector<Tensor> steps;
  for (const auto& v : out.logits) steps.push_back(v.value());
  return Tensor::stack(steps);
}

Var temporal_readout(std::span<const Var> logits_per_step) {
  if (logits_per_step.empty()) throw std::invalid_argument("temporal_readout: T must be >= 1");
  return softmax(mean_of(logits_per_step));
}

Tensor temporal_readout(const Tensor& logits_per_step) {
  if (logits_per_step.rank() != 3) {
    throw DimensionError("temporal_readout: expected [T x B x C], got " + shape_str(logits_per_step.shape()));
  }
  const std::size_t steps = logits_per_step.dim(0);
  Tensor avg(Shape{logits_per_step.dim(1), logits_per_step.dim(2)}, 0.0);
  for (std::size_t t = 0; t < steps; ++t) avg.add_inplace(logits_per_step.slice0(t));
  for (auto& v : avg.data()) v /= static_cast<double>(steps);
  return softmax_rows(avg);
}

Tensor forward_probs(const SpikingNetwork& net, const Tensor& sequence) {
  return temporal_readout(run_unrolled(net, sequence));
}

Tensor encode_indices(const Dataset& ds, const EncoderConfig& enc, std::span<const std::size_t> indices,
                      std::size_t network_channels) {
  std::vector<Tensor> imgs;
  imgs.reserve(indices.size());
  for (auto i : indices) imgs.push_back(ds.images.at(i));
  return encode_batch(enc, imgs, network_channels);
}

Tensor encode_range(const Dataset& ds, const EncoderConfig& enc, std::size_t first, std::size_t count,
                    std::size_t network_channels) {
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = first + i;
  return encode_indices(ds, enc, idx, network_channels);
}

Tensor dataset_probs(const SpikingNetwork& net, const Dataset& ds, const EncoderConfig& enc, std::size_t batch_size) {
  if (ds.empty()) throw std::invalid_argument("dataset_probs: empty dataset");
  Tensor out(Shape{ds.size(), net.spec.classes});
  for (std::size_t first = 0; first < ds.size(); first += batch_size) {
    const std::size_t count = std::min(batch_size, ds.size() - first);
    const Tensor probs = forward_probs(net, encode_range(ds, enc, first, count, net.input_channels()));
    std::copy(probs.data().begin(), probs.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(first * net.spec.classes));
  }
  return out;
}

FiringRates firing_rates(const SpikingNetwork& net, const Dataset& ds, const EncoderConfig& enc, std::size_t batch_size) {
  if (ds.empty()) throw std::invalid_argument("firing_rates: empty dataset");
  const auto spiking = net.spiking_layers();
  std::vector<double> totals(spiking.size(), 0.0);
  std::vector<std::size_t> neurons;
  std::size_t steps = 0;
  for (std::size_t first = 0; first < ds.size(); first += batch_size) {
    const std::size_t count = std::min(batch_size, ds.size() - first);
    const Tensor seq = encode_range(ds, enc, first, count, net.input_channels());
    steps = seq.dim(0);
    Tape tape;
    tape.set_grad_enabled(false);
    const auto params = bind_parameters(net, tape, false);
    const auto out = run_unrolled(net, params, seq);
    for (std::size_t l = 0; l < totals.size(); ++l) totals[l] += out.spike_totals[l];
    neurons = out.neurons;
  }
  FiringRates rates;
  for (std::size_t l = 0; l < totals.size(); ++l) {
    const double denom = static_cast<double>(neurons[l] * steps * ds.size());
    rates.per_layer.push_back(totals[l] / denom);
  }
  for (double r : rates.per_layer) rates.mean += r;
  if (!rates.per_layer.empty()) rates.mean /= static_cast<double>(rates.per_layer.size());
  return rates;
}

namespace {

constexpr char kWeightsMagic[4] = {'D', '2', 'E', 'W'};

void write_u32(std::ostream& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.put(static_cast<char>((v >> s) & 0xFF));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  for (int s = 0; s < 32; s += 8) {
    const int c = in.get();
    if (c == EOF) throw std::runtime_error("truncated parameter file");
    v |= static_cast<std::uint32_t>(c & 0xFF) << s;
  }
  return v;
}

}  // namespace

void write_parameters(const SpikingNetwork& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kWeightsMagic, 4);
  write_u32(out, static_cast<std::uint32_t>(net.params.size()));
  for (const auto& p : net.params) {
    write_u32(out, static_cast<std::uint32_t>(p.rank()));
    for (auto d : p.shape()) write_u32(out, static_cast<std::uint32_t>(d));
    for (double v : p.data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int s = 0; s < 64; s += 8) out.put(static_cast<char>((bits >> s) & 0xFF));
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

void read_parameters(SpikingNetwork& net, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kWeightsMagic)) throw std::runtime_error(path + ": not a D2EW file");
  const std::uint32_t count = read_u32(in);
  if (count != net.params.size()) throw std::runtime_error(path + ": parameter count does not match architecture");
  for (auto& p : net.params) {
    const std::uint32_t rank = read_u32(in);
    Shape shape(rank);
    for (auto& d : shape) d = read_u32(in);
    if (shape != p.shape()) {
      throw std::runtime_error(path + ": tensor shape " + shape_str(shape) + " does not match " + shape_str(p.shape()));
    }
    for (auto& v : p.data()) {
      std::uint64_t bits = 0;
      for (int s = 0; s < 64; s += 8) {
        const int c = in.get();
        if (c == EOF) throw std::runtime_error("truncated parameter file");
        bits |= static_cast<std::uint64_t>(c & 0xFF) << s;
      }
      std::memcpy(&v, &bits, sizeof v);
    }
  }
}

}  // namespace d2e
