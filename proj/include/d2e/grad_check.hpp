#pragma once

#include <functional>

#include "d2e/autodiff.hpp"

namespace d2e {

/// Builds a scalar objective on the given tape from the parameter var.
using ScalarObjective = std::function<Var(Tape&, const Var&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  Tensor analytic;
  Tensor numeric;
};

/// Compares the tape gradient of f at params against central differences
/// (f(p+h) - f(p-h)) / 2h per coordinate. Relative error per coordinate is
/// |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(const ScalarObjective& f, const Tensor& params, double h = 1e-4);

}  // namespace d2e
