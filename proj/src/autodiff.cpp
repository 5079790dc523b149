#include "d2e/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "d2e/neuron.hpp"
#include "d2e/parallel.hpp"

namespace d2e {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, grad_enabled_});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  bool needs = false;
  for (const auto& in : inputs) {
    if (&in.tape() != this) throw std::logic_error("op mixes vars from different tapes");
    node.inputs.push_back(in.id());
    needs = needs || nodes_[in.id()].requires_grad;
  }
  node.requires_grad = grad_enabled_ && needs;
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::grad(std::size_t id) const {
  const auto& g = nodes_[id].grad;
  return g.empty() ? empty_grad_ : g;
}

Tensor& Tape::grad_mut(std::size_t id) {
  auto& node = nodes_[id];
  if (node.grad.empty()) node.grad = Tensor::like(node.value);
  return node.grad;
}

std::size_t Tape::backward(const Var& root) {
  if (&root.tape() != this) throw std::logic_error("backward root belongs to another tape");
  if (root.value().numel() != 1) {
    throw DimensionError("backward root must be a scalar, got " + shape_str(root.shape()));
  }
  grad_mut(root.id()).fill(1.0);
  std::size_t executed = 0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.requires_grad || !node.backward || node.grad.empty()) continue;
    node.backward(*this, i);
    ++executed;
  }
  return executed;
}

namespace {

void require_same(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

template <typename F>
Tensor map(const Tensor& a, F&& f) {
  Tensor out = Tensor::like(a);
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = f(a[i]);
  return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F&& f) {
  Tensor out = Tensor::like(a);
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

// grad_mut(in) += factor * g, elementwise.
void accumulate(Tape& tape, std::size_t in, const Tensor& g, double factor = 1.0) {
  if (!tape.requires_grad(in)) return;
  auto& dst = tape.grad_mut(in);
  for (std::size_t i = 0; i < g.numel(); ++i) dst[i] += factor * g[i];
}

void require_rank(const Var& v, std::size_t rank, const char* op) {
  if (v.shape().size() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(v.shape()));
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  return a.tape().record(zip(a.value(), b.value(), std::plus<>()), {a, b}, [](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    accumulate(t, t.inputs(self)[0], g);
    accumulate(t, t.inputs(self)[1], g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  return a.tape().record(zip(a.value(), b.value(), std::minus<>()), {a, b}, [](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    accumulate(t, t.inputs(self)[0], g);
    accumulate(t, t.inputs(self)[1], g, -1.0);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  return a.tape().record(zip(a.value(), b.value(), std::multiplies<>()), {a, b}, [](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto ia = t.inputs(self)[0];
    const auto ib = t.inputs(self)[1];
    if (t.requires_grad(ia)) accumulate(t, ia, zip(g, t.value(ib), std::multiplies<>()));
    if (t.requires_grad(ib)) accumulate(t, ib, zip(g, t.value(ia), std::multiplies<>()));
  });
}

Var scale(const Var& a, double factor) {
  return a.tape().record(map(a.value(), [factor](double v) { return v * factor; }), {a},
                         [factor](Tape& t, std::size_t self) { accumulate(t, t.inputs(self)[0], t.grad(self), factor); });
}

Var add_scalar(const Var& a, double offset) {
  return a.tape().record(map(a.value(), [offset](double v) { return v + offset; }), {a},
                         [](Tape& t, std::size_t self) { accumulate(t, t.inputs(self)[0], t.grad(self)); });
}

Var square(const Var& a) {
  return a.tape().record(map(a.value(), [](double v) { return v * v; }), {a}, [](Tape& t, std::size_t self) {
    const auto in = t.inputs(self)[0];
    accumulate(t, in, zip(t.grad(self), t.value(in), [](double g, double x) { return 2.0 * g * x; }));
  });
}

Var abs(const Var& a) {
  return a.tape().record(map(a.value(), [](double v) { return std::abs(v); }), {a}, [](Tape& t, std::size_t self) {
    const auto in = t.inputs(self)[0];
    // sign(0) = 0 subgradient
    accumulate(t, in, zip(t.grad(self), t.value(in), [](double g, double x) {
                 return x > 0 ? g : (x < 0 ? -g : 0.0);
               }));
  });
}

Var detach(const Var& a) { return a.tape().constant(a.value()); }

Var reshape(const Var& a, Shape shape) {
  return a.tape().record(a.value().reshaped(std::move(shape)), {a}, [](Tape& t, std::size_t self) {
    const auto in = t.inputs(self)[0];
    accumulate(t, in, t.grad(self).reshaped(t.value(in).shape()));
  });
}

Var sum(const Var& a) {
  return a.tape().record(Tensor::scalar(a.value().sum()), {a}, [](Tape& t, std::size_t self) {
    const auto in = t.inputs(self)[0];
    accumulate(t, in, Tensor::like(t.value(in), t.grad(self)[0]));
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().numel());
  return a.tape().record(Tensor::scalar(a.value().sum() / n), {a}, [n](Tape& t, std::size_t self) {
    const auto in = t.inputs(self)[0];
    accumulate(t, in, Tensor::like(t.value(in), t.grad(self)[0] / n));
  });
}

Var mean_of(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("mean_of: empty input");
  Tensor out = Tensor::like(parts[0].value());
  for (const auto& p : parts) {
    require_same(parts[0], p, "mean_of");
    out.add_inplace(p.value());
  }
  const double n = static_cast<double>(parts.size());
  for (auto& v : out.data()) v /= n;
  return parts[0].tape().record(std::move(out), parts, [n](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (auto in : t.inputs(self)) accumulate(t, in, g, 1.0 / n);
  });
}

Tensor affine_forward(const Tensor& x, const Tensor& w, const Tensor* b) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(1) || (b && (b->rank() != 1 || b->dim(0) != w.dim(0)))) {
    throw DimensionError("affine: incompatible shapes x" + shape_str(x.shape()) + " W" + shape_str(w.shape()) +
                         (b ? " b" + shape_str(b->shape()) : std::string()));
  }
  const std::size_t batch = x.dim(0), n = x.dim(1), m = w.dim(0);
  Tensor out(Shape{batch, m});
  // Row-major W^T so the inner loop runs over contiguous outputs; zero inputs
  // (most of a spike train) are skipped.
  std::vector<double> wt(n * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < n; ++k) wt[k * m + j] = w[j * n + k];
  const double* xp = x.data().data();
  double* op = out.data().data();
  parallel_for(batch, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double* xi = xp + i * n;
      double* oi = op + i * m;
      for (std::size_t j = 0; j < m; ++j) oi[j] = b ? (*b)[j] : 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double xk = xi[k];
        if (xk == 0.0) continue;
        const double* wk = wt.data() + k * m;
        for (std::size_t j = 0; j < m; ++j) oi[j] += xk * wk[j];
      }
    }
  });
  return out;
}

Var affine(const Var& x, const Var& w, const Var& b) {
  Tensor out = affine_forward(x.value(), w.value(), &b.value());
  return x.tape().record(std::move(out), {x, w, b}, [](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto ix = t.inputs(self)[0], iw = t.inputs(self)[1], ib = t.inputs(self)[2];
    const Tensor& xv = t.value(ix);
    const Tensor& wv = t.value(iw);
    const std::size_t batch = xv.dim(0), n = xv.dim(1), m = wv.dim(0);
    if (t.requires_grad(ix)) {
      auto& dx = t.grad_mut(ix);
      parallel_for(batch, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            const double gij = g[i * m + j];
            if (gij == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) dx[i * n + k] += gij * wv[j * n + k];
          }
        }
      });
    }
    if (t.requires_grad(iw)) {
      auto& dw = t.grad_mut(iw);
      parallel_for(m, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t j = lo; j < hi; ++j) {
          for (std::size_t i = 0; i < batch; ++i) {
            const double gij = g[i * m + j];
            if (gij == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) dw[j * n + k] += gij * xv[i * n + k];
          }
        }
      });
    }
    if (t.requires_grad(ib)) {
      auto& db = t.grad_mut(ib);
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < m; ++j) db[j] += g[i * m + j];
    }
  });
}

std::size_t conv_output_size(std::size_t input, std::size_t kernel, ConvGeometry geom) {
  if (geom.stride == 0) throw GeometryError("conv stride must be positive");
  const std::size_t padded = input + 2 * geom.padding;
  if (kernel == 0 || kernel > padded || (padded - kernel) % geom.stride != 0) {
    throw GeometryError("conv geometry: (" + std::to_string(input) + " + 2*" + std::to_string(geom.padding) + " - " +
                        std::to_string(kernel) + ")/" + std::to_string(geom.stride) +
                        " + 1 is not a positive integer");
  }
  return (padded - kernel) / geom.stride + 1;
}

namespace {

struct ConvDims {
  std::size_t batch, cin, h, w, cout, k, oh, ow;
};

ConvDims conv_dims(const Tensor& x, const Tensor& kernel, ConvGeometry geom) {
  if (x.rank() != 4 || kernel.rank() != 4 || kernel.dim(2) != kernel.dim(3) || x.dim(1) != kernel.dim(1)) {
    throw DimensionError("conv2d: incompatible shapes x" + shape_str(x.shape()) + " kernel" +
                         shape_str(kernel.shape()));
  }
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), kernel.dim(0), kernel.dim(2), 0, 0};
  d.oh = conv_output_size(d.h, d.k, geom);
  d.ow = conv_output_size(d.w, d.k, geom);
  return d;
}

// Visits (input offset, kernel offset) pairs contributing to output (b, o, y, x).
template <typename F>
void conv_taps(const ConvDims& d, ConvGeometry geom, std::size_t b, std::size_t o, std::size_t oy, std::size_t ox,
               F&& f) {
  for (std::size_t c = 0; c < d.cin; ++c) {
    for (std::size_t ky = 0; ky < d.k; ++ky) {
      const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geom.stride + ky) - static_cast<std::ptrdiff_t>(geom.padding);
      if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
      for (std::size_t kx = 0; kx < d.k; ++kx) {
        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geom.stride + kx) - static_cast<std::ptrdiff_t>(geom.padding);
        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
        const std::size_t in_off = ((b * d.cin + c) * d.h + static_cast<std::size_t>(iy)) * d.w + static_cast<std::size_t>(ix);
        const std::size_t k_off = ((o * d.cin + c) * d.k + ky) * d.k + kx;
        f(in_off, k_off);
      }
    }
  }
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& kernel, ConvGeometry geom) {
  const ConvDims d = conv_dims(x, kernel, geom);
  Tensor out(Shape{d.batch, d.cout, d.oh, d.ow});
  parallel_for(d.batch * d.cout, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t bo = lo; bo < hi; ++bo) {
      const std::size_t b = bo / d.cout, o = bo % d.cout;
      for (std::size_t oy = 0; oy < d.oh; ++oy) {
        for (std::size_t ox = 0; ox < d.ow; ++ox) {
          double acc = 0.0;
          conv_taps(d, geom, b, o, oy, ox, [&](std::size_t in_off, std::size_t k_off) { acc += x[in_off] * kernel[k_off]; });
          out[((b * d.cout + o) * d.oh + oy) * d.ow + ox] = acc;
        }
      }
    }
  });
  return out;
}

Var conv2d(const Var& x, const Var& kernel, ConvGeometry geom) {
  Tensor out = conv2d_forward(x.value(), kernel.value(), geom);
  return x.tape().record(std::move(out), {x, kernel}, [geom](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto ix = t.inputs(self)[0], ik = t.inputs(self)[1];
    const Tensor& xv = t.value(ix);
    const Tensor& kv = t.value(ik);
    const ConvDims d = conv_dims(xv, kv, geom);
    auto out_grad = [&](std::size_t b, std::size_t o, std::size_t oy, std::size_t ox) {
      return g[((b * d.cout + o) * d.oh + oy) * d.ow + ox];
    };
    if (t.requires_grad(ix)) {
      // Each batch index owns its slab of dx.
      auto& dx = t.grad_mut(ix);
      parallel_for(d.batch, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t b = lo; b < hi; ++b)
          for (std::size_t o = 0; o < d.cout; ++o)
            for (std::size_t oy = 0; oy < d.oh; ++oy)
              for (std::size_t ox = 0; ox < d.ow; ++ox) {
                const double go = out_grad(b, o, oy, ox);
                if (go == 0.0) continue;
                conv_taps(d, geom, b, o, oy, ox, [&](std::size_t in_off, std::size_t k_off) { dx[in_off] += go * kv[k_off]; });
              }
      });
    }
    if (t.requires_grad(ik)) {
      auto& dk = t.grad_mut(ik);
      parallel_for(d.cout, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t o = lo; o < hi; ++o)
          for (std::size_t b = 0; b < d.batch; ++b)
            for (std::size_t oy = 0; oy < d.oh; ++oy)
              for (std::size_t ox = 0; ox < d.ow; ++ox) {
                const double go = out_grad(b, o, oy, ox);
                if (go == 0.0) continue;
                conv_taps(d, geom, b, o, oy, ox, [&](std::size_t in_off, std::size_t k_off) { dk[k_off] += go * xv[in_off]; });
              }
      });
    }
  });
}

Var add_channel_bias(const Var& x, const Var& bias) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4 || bias.value().rank() != 1 || bias.value().dim(0) != xv.dim(1)) {
    throw DimensionError("add_channel_bias: x" + shape_str(xv.shape()) + " bias" + shape_str(bias.shape()));
  }
  const std::size_t batch = xv.dim(0), channels = xv.dim(1), plane = xv.dim(2) * xv.dim(3);
  Tensor out = xv;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t p = 0; p < plane; ++p) out[(b * channels + c) * plane + p] += bias.value()[c];
  return x.tape().record(std::move(out), {x, bias}, [batch, channels, plane](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    accumulate(t, t.inputs(self)[0], g);
    const auto ib = t.inputs(self)[1];
    if (!t.requires_grad(ib)) return;
    auto& db = t.grad_mut(ib);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t p = 0; p < plane; ++p) db[c] += g[(b * channels + c) * plane + p];
  });
}

Var avg_pool2d(const Var& x, std::size_t k) {
  require_rank(x, 4, "avg_pool2d");
  const Tensor& xv = x.value();
  if (k == 0 || xv.dim(2) % k != 0 || xv.dim(3) % k != 0) {
    throw GeometryError("avg_pool2d: window " + std::to_string(k) + " does not tile " + shape_str(xv.shape()));
  }
  const std::size_t batch = xv.dim(0), channels = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const std::size_t oh = h / k, ow = w / k;
  const double inv = 1.0 / static_cast<double>(k * k);
  Tensor out(Shape{batch, channels, oh, ow});
  for (std::size_t bc = 0; bc < batch * channels; ++bc)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        double acc = 0.0;
        for (std::size_t dy = 0; dy < k; ++dy)
          for (std::size_t dx = 0; dx < k; ++dx) acc += xv[(bc * h + y * k + dy) * w + xx * k + dx];
        out[(bc * oh + y) * ow + xx] = acc * inv;
      }
  return x.tape().record(std::move(out), {x}, [=](Tape& t, std::size_t self) {
    const auto in = t.inputs(self)[0];
    if (!t.requires_grad(in)) return;
    const auto& g = t.grad(self);
    auto& gx = t.grad_mut(in);
    for (std::size_t bc = 0; bc < batch * channels; ++bc)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const double go = g[(bc * oh + y) * ow + xx] * inv;
          for (std::size_t dy = 0; dy < k; ++dy)
            for (std::size_t dx = 0; dx < k; ++dx) gx[(bc * h + y * k + dy) * w + xx * k + dx] += go;
        }
  });
}

Tensor softmax_rows(const Tensor& z) {
  if (z.rank() != 2) throw DimensionError("softmax: expected [B x C], got " + shape_str(z.shape()));
  const std::size_t rows = z.dim(0), cols = z.dim(1);
  Tensor out = Tensor::like(z);
  for (std::size_t i = 0; i < rows; ++i) {
    double mx = z[i * cols];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, z[i * cols + j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = std::exp(z[i * cols + j] - mx);
      denom += out[i * cols + j];
    }
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] /= denom;
  }
  return out;
}

Var softmax(const Var& z) {
  return z.tape().record(softmax_rows(z.value()), {z}, [](Tape& t, std::size_t self) {
    const auto in = t.inputs(self)[0];
    if (!t.requires_grad(in)) return;
    const Tensor& p = t.value(self);
    const Tensor& g = t.grad(self);
    auto& gz = t.grad_mut(in);
    const std::size_t rows = p.dim(0), cols = p.dim(1);
    for (std::size_t i = 0; i < rows; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += g[i * cols + j] * p[i * cols + j];
      for (std::size_t j = 0; j < cols; ++j) gz[i * cols + j] += p[i * cols + j] * (g[i * cols + j] - dot);
    }
  });
}

Var cross_entropy(const Var& probs, std::span<const int> labels) {
  require_rank(probs, 2, "cross_entropy");
  const Tensor& p = probs.value();
  const std::size_t rows = p.dim(0), cols = p.dim(1);
  if (labels.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for probs " + shape_str(p.shape()));
  }
  std::vector<std::size_t> idx(rows);
  double loss = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= cols) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(labels[i]) + " outside [0," + std::to_string(cols) + ")");
    }
    idx[i] = i * cols + static_cast<std::size_t>(labels[i]);
    loss -= std::log(std::max(p[idx[i]], kLogFloor));
  }
  const double n = static_cast<double>(rows);
  return probs.tape().record(Tensor::scalar(loss / n), {probs}, [idx = std::move(idx), n](Tape& t, std::size_t self) {
    const auto in = t.inputs(self)[0];
    if (!t.requires_grad(in)) return;
    const double g = t.grad(self)[0];
    const Tensor& p = t.value(in);
    auto& gp = t.grad_mut(in);
    for (auto k : idx) {
      if (p[k] > kLogFloor) gp[k] -= g / (n * p[k]);
    }
  });
}

Var kl_divergence(const Var& p, const Var& q) {
  require_same(p, q, "kl_divergence");
  require_rank(p, 2, "kl_divergence");
  const Tensor& pv = p.value();
  const Tensor& qv = q.value();
  double total = 0.0;
  for (std::size_t i = 0; i < pv.numel(); ++i) {
    if (pv[i] > 0.0) total += pv[i] * (std::log(pv[i]) - std::log(std::max(qv[i], kLogFloor)));
  }
  const double n = static_cast<double>(pv.dim(0));
  return p.tape().record(Tensor::scalar(total / n), {p, q}, [n](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0] / n;
    const auto ip = t.inputs(self)[0], iq = t.inputs(self)[1];
    const Tensor& pv = t.value(ip);
    const Tensor& qv = t.value(iq);
    if (t.requires_grad(ip)) {
      auto& gp = t.grad_mut(ip);
      for (std::size_t i = 0; i < pv.numel(); ++i) {
        gp[i] += g * (std::log(std::max(pv[i], kLogFloor)) - std::log(std::max(qv[i], kLogFloor)) + 1.0);
      }
    }
    if (t.requires_grad(iq)) {
      auto& gq = t.grad_mut(iq);
      for (std::size_t i = 0; i < pv.numel(); ++i) {
        if (qv[i] > kLogFloor) gq[i] -= g * pv[i] / qv[i];
      }
    }
  });
}

Var spike_surrogate(const Var& u, double alpha) {
  return u.tape().record(map(u.value(), [](double v) { return v >= 0.0 ? 1.0 : 0.0; }), {u},
                         [alpha](Tape& t, std::size_t self) {
                           const auto in = t.inputs(self)[0];
                           accumulate(t, in, zip(t.grad(self), t.value(in), [alpha](double g, double x) {
                                        return g * surrogate_derivative(x, alpha);
                                      }));
                         });
}

Var spike_smooth(const Var& u, double alpha) {
  const double k = std::numbers::pi * alpha / 2.0;
  return u.tape().record(map(u.value(), [k](double v) { return std::atan(k * v) / std::numbers::pi + 0.5; }), {u},
                         [alpha](Tape& t, std::size_t self) {
                           const auto in = t.inputs(self)[0];
                           accumulate(t, in, zip(t.grad(self), t.value(in), [alpha](double g, double x) {
                                        return g * surrogate_derivative(x, alpha);
                                      }));
                         });
}

}  // namespace d2e
