#pragma once

#include "d2e/autodiff.hpp"

namespace d2e {

/// Hard-reset LIF parameters. Defaults follow the SpikingJelly LIF node.
struct LIFParams {
  double tau = 2.0;
  double v_threshold = 1.0;
  double v_reset = 0.0;
  double surrogate_alpha = 2.0;
  /// Cut the gradient through the reset branch (spike used in v' = H(1-s) + v_reset*s).
  bool detach_reset = false;

  /// Throws std::invalid_argument unless tau > 1, v_threshold > v_reset and alpha > 0.
  void validate() const;
};

enum class SpikeMode {
  /// Heaviside forward, arctangent surrogate backward (training).
  Surrogate,
  /// Arctangent sigmoid forward and backward; only for finite-difference checks.
  Smooth,
};

struct LIFLayerState {
  Var v;
};

struct LIFStepResult {
  Var spikes;
  LIFLayerState state;
};

/// alpha / (2 (1 + (pi alpha u / 2)^2)), the derivative of atan(pi alpha u / 2)/pi + 1/2.
double surrogate_derivative(double u, double alpha);

/// Fresh membrane state at v_reset with the given per-sample neuron shape.
LIFLayerState lif_initial_state(Tape& tape, const Shape& shape, const LIFParams& params);

/// One LIF update:
///   H  = v + (I - (v - v_reset)) / tau
///   s  = Heaviside(H - v_threshold)
///   v' = H (1 - s) + v_reset s
LIFStepResult lif_step(const LIFLayerState& state, const Var& input_current, const LIFParams& params,
                       SpikeMode mode = SpikeMode::Surrogate);

}  // namespace d2e
