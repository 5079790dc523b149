#pragma once
// Hand-derived reference values shared by the unit and acceptance tests.
// The derivations are written out in docs/bptt_oracle.md.

#include <cmath>
#include <numbers>
#include <vector>

#include "d2e/autodiff.hpp"
#include "d2e/network.hpp"
#include "d2e/neuron.hpp"

namespace d2e::oracle {

/// atan(pi a u / 2) / pi + 1/2
inline double smooth_spike(double u, double alpha) {
  return std::atan(std::numbers::pi * alpha * u / 2.0) / std::numbers::pi + 0.5;
}

struct BpttCase {
  double w = 1.7;
  double x1 = 1.0;
  double x2 = 0.6;
  LIFParams lif{};
};

struct BpttValues {
  double loss = 0.0;
  double dloss_dw = 0.0;
};

/// One neuron, current I_t = w x_t, two steps of the smooth LIF from v0 = v_reset,
/// loss = s1 + s2. Symbolic chain rule, no tape.
inline BpttValues bptt_symbolic(const BpttCase& c) {
  const double tau = c.lif.tau, th = c.lif.v_threshold, vr = c.lif.v_reset, a = c.lif.surrogate_alpha;
  const double v0 = vr;
  // step 1
  const double h1 = v0 + (c.w * c.x1 - (v0 - vr)) / tau;
  const double dh1 = c.x1 / tau;
  const double s1 = smooth_spike(h1 - th, a);
  const double ds1 = surrogate_derivative(h1 - th, a) * dh1;
  const double v1 = h1 * (1.0 - s1) + vr * s1;
  const double dv1 = dh1 * (1.0 - s1) - h1 * ds1 + vr * ds1;
  // step 2
  const double h2 = v1 + (c.w * c.x2 - (v1 - vr)) / tau;
  const double dh2 = dv1 * (1.0 - 1.0 / tau) + c.x2 / tau;
  const double s2 = smooth_spike(h2 - th, a);
  const double ds2 = surrogate_derivative(h2 - th, a) * dh2;
  return {s1 + s2, ds1 + ds2};
}

/// Same computation on the tape through lif_step in smooth mode.
inline BpttValues bptt_tape(const BpttCase& c) {
  Tape tape;
  const Var w = tape.leaf(Tensor(Shape{1, 1}, c.w));
  const Var b = tape.constant(Tensor(Shape{1}, 0.0));
  LIFLayerState st = lif_initial_state(tape, Shape{1, 1}, c.lif);
  Var total;
  for (double x : {c.x1, c.x2}) {
    const Var in = affine(tape.constant(Tensor(Shape{1, 1}, x)), w, b);
    auto r = lif_step(st, in, c.lif, SpikeMode::Smooth);
    st = r.state;
    total = total.valid() ? add(total, r.spikes) : r.spikes;
  }
  const Var loss = sum(total);
  tape.backward(loss);
  return {loss.value().item(), tape.grad(w)[0]};
}

/// input [1 x 1 x 1] -> flatten -> affine(width)+LIF -> readout(classes)
inline ArchitectureSpec scalar_input_spec(std::size_t width, std::size_t classes) {
  return {"scalar", 1, 1, 1, classes, {{LayerKind::Flatten}, {LayerKind::AffineLIF, width}, {LayerKind::Readout}}};
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace d2e::oracle
