#include <doctest.h>

#include <cmath>
#include <numeric>
#include <string>

#include "d2e/autodiff.hpp"
#include "d2e/grad_check.hpp"
#include "d2e/random.hpp"
#include "oracles.hpp"

using namespace d2e;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t(std::move(shape));
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

}  // namespace

TEST_SUITE("tensor-autodiff") {
  TEST_CASE("tensor basics") {
    Tensor t(Shape{2, 3}, 1.5);
    CHECK(t.numel() == 6);
    CHECK(t.sum() == doctest::Approx(9.0));
    t.at({1, 2}) = 4.0;
    CHECK(t[5] == 4.0);
    CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
    const Tensor s = Tensor::stack(std::vector<Tensor>{Tensor(Shape{2}, 1.0), Tensor(Shape{2}, 2.0)});
    CHECK(s.shape() == Shape{2, 2});
    CHECK(s.slice0(1) == Tensor(Shape{2}, 2.0));
  }

  TEST_CASE("affine examples") {
    Tape tape;
    auto x = tape.constant(Tensor(Shape{1, 2}, {1, 0}));
    auto w = tape.constant(Tensor(Shape{2, 2}, 0.0));
    auto b = tape.constant(Tensor(Shape{2}, {3, 5}));
    CHECK(affine(x, w, b).value().vec() == std::vector<double>{3, 5});

    auto x2 = tape.constant(Tensor(Shape{1, 2}, {1, 2}));
    auto w2 = tape.leaf(Tensor(Shape{1, 2}, {1, 1}));
    auto b2 = tape.constant(Tensor(Shape{1}, 0.0));
    auto out = affine(x2, w2, b2);
    CHECK(out.value().item() == 3.0);
    // d(out^2 / 2)/dW = out * x = [3, 6]
    tape.backward(scale(square(out), 0.5));
    CHECK(tape.grad(w2).vec() == std::vector<double>{3, 6});
  }

  TEST_CASE("affine shape mismatch names both shapes") {
    Tape tape;
    auto x = tape.constant(Tensor(Shape{1, 3}));
    auto w = tape.constant(Tensor(Shape{2, 2}));
    auto b = tape.constant(Tensor(Shape{2}));
    try {
      affine(x, w, b);
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[1x3]") != std::string::npos);
      CHECK(msg.find("[2x2]") != std::string::npos);
    }
  }

  TEST_CASE("conv2d examples") {
    Tape tape;
    auto ones = tape.constant(Tensor(Shape{1, 1, 3, 3}, 1.0));
    auto k = tape.constant(Tensor(Shape{1, 1, 3, 3}, 1.0));
    CHECK(conv2d(ones, k, {}).value().vec() == std::vector<double>{9});

    Rng rng(3);
    auto x = tape.constant(random_tensor({2, 1, 4, 5}, rng));
    auto id = tape.constant(Tensor(Shape{1, 1, 1, 1}, 1.0));
    CHECK(conv2d(x, id, {}).value() == x.value());

    Tensor ramp(Shape{1, 1, 4, 4});
    std::iota(ramp.data().begin(), ramp.data().end(), 0.0);
    auto kr = tape.constant(Tensor(Shape{1, 1, 2, 2}, {1, 0, 0, -1}));
    const Tensor out = conv2d(tape.constant(ramp), kr, {2, 0}).value();
    CHECK(out.shape() == Shape{1, 1, 2, 2});
    CHECK(out.vec() == std::vector<double>{-5, -5, -5, -5});
  }

  TEST_CASE("conv2d geometry errors") {
    CHECK(conv_output_size(5, 3, {2, 0}) == 2);
    CHECK_THROWS_AS(conv_output_size(4, 3, {2, 0}), GeometryError);
    CHECK_THROWS_AS(conv_output_size(2, 3, {1, 0}), GeometryError);
    CHECK(conv_output_size(4, 3, {1, 1}) == 4);
  }

  TEST_CASE("softmax examples") {
    Tape tape;
    CHECK(softmax(tape.constant(Tensor(Shape{1, 2}, {0, 0}))).value().vec() == std::vector<double>{0.5, 0.5});
    const Tensor p = softmax(tape.constant(Tensor(Shape{1, 2}, {std::log(1.0), std::log(3.0)}))).value();
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-12));
    const Tensor big = softmax(tape.constant(Tensor(Shape{1, 2}, {1000, 1000}))).value();
    CHECK(big.vec() == std::vector<double>{0.5, 0.5});
  }

  TEST_CASE("softmax rows sum to one") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const Tensor p = softmax_rows(random_tensor({4, 7}, rng, -30.0, 30.0));
      for (std::size_t i = 0; i < 4; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 7; ++j) {
          CHECK(p[i * 7 + j] >= 0.0);
          s += p[i * 7 + j];
        }
        CHECK(std::abs(s - 1.0) <= 1e-9);
      }
    }
  }

  TEST_CASE("cross entropy examples") {
    Tape tape;
    const std::vector<int> l0{0}, l1{1}, l10{1, 0};
    CHECK(cross_entropy(tape.constant(Tensor(Shape{1, 2}, {1, 0})), l0).value().item() == 0.0);
    CHECK(cross_entropy(tape.constant(Tensor(Shape{1, 2}, {0.5, 0.5})), l1).value().item() ==
          doctest::Approx(std::log(2.0)));
    CHECK(cross_entropy(tape.constant(Tensor(Shape{2, 2}, {0.5, 0.5, 1, 0})), l10).value().item() ==
          doctest::Approx(0.34657359).epsilon(1e-8));
    // zero at the true label is clamped, not infinite
    CHECK(cross_entropy(tape.constant(Tensor(Shape{1, 2}, {0, 1})), l0).value().item() ==
          doctest::Approx(-std::log(kLogFloor)));
  }

  TEST_CASE("kl divergence examples") {
    Tape tape;
    auto kl = [&](std::vector<double> p, std::vector<double> q) {
      const std::size_t c = p.size();
      return kl_divergence(tape.constant(Tensor(Shape{1, c}, p)), tape.constant(Tensor(Shape{1, c}, q))).value().item();
    };
    CHECK(kl({0.3, 0.7}, {0.3, 0.7}) == 0.0);
    CHECK(kl({0.5, 0.5}, {0.25, 0.75}) == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)));
    CHECK(kl({0.5, 0.5}, {0.25, 0.75}) == doctest::Approx(0.1438).epsilon(1e-3));
    CHECK(kl({1, 0}, {0.5, 0.5}) == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("kl is nonnegative on random simplex pairs") {
    Rng rng(5);
    Tape tape;
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t c = 2 + rng.below(9);
      const auto p = random_simplex(c, rng), q = random_simplex(c, rng);
      const double v =
          kl_divergence(tape.constant(Tensor(Shape{1, c}, p)), tape.constant(Tensor(Shape{1, c}, q))).value().item();
      CHECK(v >= 0.0);
      const double self =
          kl_divergence(tape.constant(Tensor(Shape{1, c}, p)), tape.constant(Tensor(Shape{1, c}, p))).value().item();
      CHECK(self == 0.0);
      tape.clear();
    }
  }

  TEST_CASE("grad_check examples") {
    const auto quad = [](Tape&, const Var& t) { return scale(sum(square(t)), 0.5); };
    CHECK(grad_check(quad, Tensor(Shape{3}, {1, 2, 3}), 1e-4).max_relative_error < 1e-6);

    Rng rng(17);
    const Tensor logits = random_tensor({2, 3}, rng);
    const std::vector<int> labels{2, 0};
    const auto ce = [&](Tape&, const Var& t) { return cross_entropy(softmax(t), labels); };
    CHECK(grad_check(ce, logits, 1e-4).max_relative_error < 1e-4);

    const Tensor q = softmax_rows(random_tensor({2, 3}, rng));
    const auto kl = [&](Tape& tape, const Var& t) { return kl_divergence(softmax(t), tape.constant(q)); };
    CHECK(grad_check(kl, random_tensor({2, 3}, rng), 1e-4).max_relative_error < 1e-4);
  }

  TEST_CASE("grad_check on affine, conv and pooling composites") {
    Rng rng(23);
    const Tensor x = random_tensor({2, 3}, rng);
    const Tensor b = random_tensor({4}, rng);
    const auto f_aff = [&](Tape& tape, const Var& w) {
      return mean(square(affine(tape.constant(x), w, tape.constant(b))));
    };
    CHECK(grad_check(f_aff, random_tensor({4, 3}, rng)).max_relative_error < 1e-4);

    const Tensor img = random_tensor({1, 2, 6, 6}, rng);
    const auto f_conv = [&](Tape& tape, const Var& k) {
      return mean(square(avg_pool2d(conv2d(tape.constant(img), k, {1, 1}), 2)));
    };
    CHECK(grad_check(f_conv, random_tensor({3, 2, 3, 3}, rng)).max_relative_error < 1e-4);

    const Tensor kernel = random_tensor({2, 2, 3, 3}, rng);
    const auto f_in = [&](Tape& tape, const Var& in) {
      return mean(square(conv2d(in, tape.constant(kernel), {2, 1})));
    };
    CHECK(grad_check(f_in, random_tensor({1, 2, 5, 5}, rng)).max_relative_error < 1e-4);
  }

  TEST_CASE("tape is topologically ordered and each node runs once") {
    Tape tape;
    auto a = tape.leaf(Tensor(Shape{2}, {1, 2}));
    auto b = tape.leaf(Tensor(Shape{2}, {3, 4}));
    auto c = mul(a, b);
    auto d = add(c, a);
    auto loss = sum(d);
    for (std::size_t id = 0; id < tape.size(); ++id) {
      for (auto in : tape.inputs(id)) CHECK(in < id);
    }
    CHECK(tape.backward(loss) == 3);  // mul, add, sum
    CHECK(tape.grad(a).vec() == std::vector<double>{4, 5});
    CHECK(tape.grad(b).vec() == std::vector<double>{1, 2});
  }

  TEST_CASE("unrolled recurrence matches the symbolic chain rule") {
    for (double w : {0.4, 1.7, 2.6, 3.3}) {
      oracle::BpttCase c;
      c.w = w;
      const auto sym = oracle::bptt_symbolic(c);
      const auto tape = oracle::bptt_tape(c);
      CHECK(oracle::rel_err(sym.loss, tape.loss) < 1e-12);
      CHECK(oracle::rel_err(sym.dloss_dw, tape.dloss_dw) < 1e-10);
    }
  }

  TEST_CASE("forward ops keep finite inputs finite") {
    Rng rng(29);
    Tape tape;
    auto z = tape.constant(random_tensor({3, 5}, rng, -500.0, 500.0));
    CHECK(softmax(z).value().all_finite());
    CHECK(spike_surrogate(z, 2.0).value().all_finite());
  }
}
