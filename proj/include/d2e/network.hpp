#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "d2e/autodiff.hpp"
#include "d2e/dataset.hpp"
#include "d2e/encoders.hpp"
#include "d2e/neuron.hpp"

namespace d2e {

enum class LayerKind { AffineLIF, ConvLIF, AvgPool, Flatten, Readout };

struct LayerSpec {
  LayerKind kind = LayerKind::AffineLIF;
  /// Output features (affine) or output channels (conv). Ignored for pool/flatten/readout.
  std::size_t width = 0;
  /// Conv kernel side or pooling window.
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
};

struct ArchitectureSpec {
  std::string name;
  std::size_t in_channels = 1;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t classes = 2;
  std::vector<LayerSpec> layers;
};

std::string layer_kind_name(LayerKind kind);

/// flatten -> affine(hidden)+LIF -> readout
ArchitectureSpec tiny_mlp(std::size_t channels, std::size_t side, std::size_t classes, std::size_t hidden = 64);
/// conv8 K3 + LIF -> avgpool2 -> conv16 K3 + LIF -> avgpool2 -> flatten -> readout
ArchitectureSpec tiny_conv(std::size_t channels, std::size_t side, std::size_t classes);
/// "tiny-mlp" or "tiny-conv".
ArchitectureSpec architecture_by_name(std::string_view name, std::size_t channels, std::size_t side,
                                      std::size_t classes);
/// Comma-separated inline layer list, e.g. "conv:8:3:1:1,pool:2,flatten,affine:32,readout".
std::vector<LayerSpec> parse_layer_list(std::string_view text);
std::string format_layer_list(std::span<const LayerSpec> layers);

/// Per-sample input/output shape of one layer.
struct LayerGeometry {
  Shape in;
  Shape out;
};

/// Validates the geometry chain; GeometryError names the offending layer.
std::vector<LayerGeometry> resolve_geometry(const ArchitectureSpec& spec);

struct SpikingNetwork {
  ArchitectureSpec spec;
  LIFParams lif;
  std::vector<LayerGeometry> geometry;
  /// Flat parameter list, weight then bias for each parametrised layer.
  std::vector<Tensor> params;
  /// Index into params of each layer's weight, or -1 for parameter-free layers.
  std::vector<int> weight_index;

  std::size_t parameter_count() const;
  std::size_t spiking_layer_count() const;
  /// Layer indices of the LIF layers, in order.
  std::vector<std::size_t> spiking_layers() const;
  std::size_t input_channels() const { return spec.in_channels; }
};

/// Kaiming-uniform weights (bound 1/sqrt(fan_in)), zero biases.
SpikingNetwork build(const ArchitectureSpec& spec, std::uint64_t init_seed, LIFParams lif = {});

/// Parameters placed on the tape, trainable or frozen.
std::vector<Var> bind_parameters(const SpikingNetwork& net, Tape& tape, bool trainable);

struct RunOptions {
  SpikeMode mode = SpikeMode::Surrogate;
};

struct UnrolledOutput {
  /// One [B, classes] logits var per timestep.
  std::vector<Var> logits;
  /// Per LIF layer: total emitted spikes over batch and time.
  std::vector<double> spike_totals;
  /// Per LIF layer: neurons per sample.
  std::vector<std::size_t> neurons;
  /// Per timestep: the first layer's output (pre-LIF current), for diagnostics.
  std::vector<Var> first_layer_current;
};

/// Unrolls the network over sequence [T, B, ...], threading LIF state through
/// time from a fresh v_reset state.
UnrolledOutput run_unrolled(const SpikingNetwork& net, std::span<const Var> params, const Tensor& sequence,
                            RunOptions opts = {});

/// No-grad convenience: stacked logits [T, B, classes].
Tensor run_unrolled(const SpikingNetwork& net, const Tensor& sequence);

/// softmax(mean_t logits_t)
Var temporal_readout(std::span<const Var> logits_per_step);
Tensor temporal_readout(const Tensor& logits_per_step);

/// Class distribution per sample, [B, classes].
Tensor forward_probs(const SpikingNetwork& net, const Tensor& sequence);

/// Forward probabilities over a whole dataset in evaluation batches.
Tensor dataset_probs(const SpikingNetwork& net, const Dataset& ds, const EncoderConfig& enc,
                     std::size_t batch_size = 256);

struct FiringRates {
  std::vector<double> per_layer;
  double mean = 0.0;
};

FiringRates firing_rates(const SpikingNetwork& net, const Dataset& ds, const EncoderConfig& enc,
                         std::size_t batch_size = 256);

/// Images [first, first+count) of the dataset as a [T, B, ...] encoded sequence.
Tensor encode_range(const Dataset& ds, const EncoderConfig& enc, std::size_t first, std::size_t count,
                    std::size_t network_channels);
Tensor encode_indices(const Dataset& ds, const EncoderConfig& enc, std::span<const std::size_t> indices,
                      std::size_t network_channels);

/// Parameter snapshot I/O ("D2EW": u32 count, then per tensor u32 rank, u32 dims, f64 data).
void write_parameters(const SpikingNetwork& net, const std::string& path);
void read_parameters(SpikingNetwork& net, const std::string& path);

}  // namespace d2e
