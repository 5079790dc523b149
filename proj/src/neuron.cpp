#include "d2e/neuron.hpp"

#include <numbers>
#include <stdexcept>

namespace d2e {

void LIFParams::validate() const {
  if (!(tau > 1.0)) throw std::invalid_argument("lif.tau must be > 1");
  if (!(v_threshold > v_reset)) throw std::invalid_argument("lif.v_threshold must exceed lif.v_reset");
  if (!(surrogate_alpha > 0.0)) throw std::invalid_argument("lif.surrogate_alpha must be > 0");
}

double surrogate_derivative(double u, double alpha) {
  const double z = std::numbers::pi * alpha * u / 2.0;
  return alpha / (2.0 * (1.0 + z * z));
}

LIFLayerState lif_initial_state(Tape& tape, const Shape& shape, const LIFParams& params) {
  return {tape.constant(Tensor(shape, params.v_reset))};
}

LIFStepResult lif_step(const LIFLayerState& state, const Var& input_current, const LIFParams& params,
                       SpikeMode mode) {
  if (state.v.shape() != input_current.shape()) {
    throw DimensionError("lif_step: membrane " + shape_str(state.v.shape()) + " vs input " +
                         shape_str(input_current.shape()));
  }
  const double inv_tau = 1.0 / params.tau;
  // H = (1 - 1/tau) v + I/tau + v_reset/tau
  Var charge = add_scalar(add(scale(state.v, 1.0 - inv_tau), scale(input_current, inv_tau)), params.v_reset * inv_tau);
  Var offset = add_scalar(charge, -params.v_threshold);
  Var spikes = mode == SpikeMode::Surrogate ? spike_surrogate(offset, params.surrogate_alpha)
                                            : spike_smooth(offset, params.surrogate_alpha);
  Var gate = params.detach_reset ? detach(spikes) : spikes;
  // v' = H - (H - v_reset) s
  Var next = sub(charge, mul(add_scalar(charge, -params.v_reset), gate));
  if (mode == SpikeMode::Surrogate) {
    // Write the reset value exactly rather than relying on H - (H - v_reset)
    // cancelling in floating point.
    Tensor exact = next.value();
    for (std::size_t i = 0; i < exact.numel(); ++i) {
      if (spikes.value()[i] == 1.0) exact[i] = params.v_reset;
    }
    if (exact != next.value()) {
      next = next.tape().record(std::move(exact), {next}, [](Tape& t, std::size_t self) {
        const auto in = t.inputs(self)[0];
        if (t.requires_grad(in)) t.grad_mut(in).add_inplace(t.grad(self));
      });
    }
  }
  return {spikes, {next}};
}

}  // namespace d2e
