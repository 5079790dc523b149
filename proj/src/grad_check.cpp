#include "d2e/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace d2e {

namespace {

double evaluate(const ScalarObjective& f, const Tensor& params) {
  Tape tape;
  tape.set_grad_enabled(false);
  return f(tape, tape.leaf(params)).value().item();
}

}  // namespace

GradCheckResult grad_check(const ScalarObjective& f, const Tensor& params, double h) {
  GradCheckResult result;
  {
    Tape tape;
    Var theta = tape.leaf(params);
    Var out = f(tape, theta);
    tape.backward(out);
    result.analytic = tape.grad(theta).empty() ? Tensor::like(params) : tape.grad(theta);
  }
  result.numeric = Tensor::like(params);
  Tensor probe = params;
  for (std::size_t i = 0; i < params.numel(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = evaluate(f, probe);
    probe[i] = orig - h;
    const double down = evaluate(f, probe);
    probe[i] = orig;
    result.numeric[i] = (up - down) / (2.0 * h);

    const double a = result.analytic[i], n = result.numeric[i];
    const double err = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace d2e
