#include "tsad/numkit/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "tsad/errors.hpp"

namespace tsad::numkit {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

Tape& tape_of(Var a) {
  if (!a.valid()) throw ContractError("use of an empty Var");
  return *a.tape();
}

void require_same_tape(Var a, Var b) {
  if (a.tape() != b.tape()) throw ContractError("operands recorded on different tapes");
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void require_rank(Var a, std::size_t rank, const char* op) {
  if (a.value().rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(a.shape()));
  }
}

// y = f(x) element-wise; dy/dx expressed from (x, y).
template <class F, class DF>
Var unary(Var a, F f, DF df) {
  Tape& tape = tape_of(a);
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t ai = a.index();
  return tape.push(std::move(y), tape.requires_grad({a}), [ai, df](Tape& t, std::size_t self) {
    const Tensor& xv = t.value(ai);
    const Tensor& yv = t.value(self);
    const std::vector<double>& gy = t.grad(self);
    std::vector<double>& gx = t.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * df(xv[i], yv[i]);
  });
}

struct SeqDims {
  std::size_t n, t, c;
};

SeqDims seq_dims(Var seq, const char* op) {
  require_rank(seq, 3, op);
  return {seq.dim(0), seq.dim(1), seq.dim(2)};
}

}  // namespace

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "add");
  Tape& tape = tape_of(a);
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const std::size_t ai = a.index(), bi = b.index();
  return tape.push(std::move(y), tape.requires_grad({a, b}), [ai, bi](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    if (t.requires_grad(ai)) {
      auto& ga = t.grad(ai);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    }
    if (t.requires_grad(bi)) {
      auto& gb = t.grad(bi);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "sub");
  Tape& tape = tape_of(a);
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const std::size_t ai = a.index(), bi = b.index();
  return tape.push(std::move(y), tape.requires_grad({a, b}), [ai, bi](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    if (t.requires_grad(ai)) {
      auto& ga = t.grad(ai);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    }
    if (t.requires_grad(bi)) {
      auto& gb = t.grad(bi);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "mul");
  Tape& tape = tape_of(a);
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const std::size_t ai = a.index(), bi = b.index();
  return tape.push(std::move(y), tape.requires_grad({a, b}), [ai, bi](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    const Tensor& av = t.value(ai);
    const Tensor& bv2 = t.value(bi);
    if (t.requires_grad(ai)) {
      auto& ga = t.grad(ai);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv2[i];
    }
    if (t.requires_grad(bi)) {
      auto& gb = t.grad(bi);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
    }
  });
}

Var add_bias(Var x, Var bias) {
  require_same_tape(x, bias);
  const std::size_t c = x.value().rank() ? x.shape().back() : 1;
  if (bias.value().size() != c) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " does not match last axis of " +
                         shape_string(x.shape()));
  }
  Tape& tape = tape_of(x);
  Tensor y = x.value();
  const Tensor& bv = bias.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i % c];
  const std::size_t xi = x.index(), bi = bias.index();
  return tape.push(std::move(y), tape.requires_grad({x, bias}), [xi, bi, c](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    if (t.requires_grad(xi)) {
      auto& gx = t.grad(xi);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    }
    if (t.requires_grad(bi)) {
      auto& gb = t.grad(bi);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i % c] += gy[i];
    }
  });
}

Var scale(Var a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary(
      a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  Tape& tape = tape_of(a);
  Tensor y({n, m});
  MapMat(y.values().data(), n, m).noalias() =
      CMapMat(a.value().values().data(), n, k) * CMapMat(b.value().values().data(), k, m);
  const std::size_t ai = a.index(), bi = b.index();
  return tape.push(std::move(y), tape.requires_grad({a, b}), [ai, bi, n, k, m](Tape& t, std::size_t self) {
    CMapMat gy(t.grad(self).data(), n, m);
    if (t.requires_grad(ai)) {
      MapMat(t.grad(ai).data(), n, k).noalias() += gy * CMapMat(t.value(bi).values().data(), k, m).transpose();
    }
    if (t.requires_grad(bi)) {
      MapMat(t.grad(bi).data(), k, m).noalias() += CMapMat(t.value(ai).values().data(), n, k).transpose() * gy;
    }
  });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  for (double v : a.value().values()) {
    if (!(v > 0)) throw NumericError("log of non-positive value");
  }
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var softplus(Var a) {
  return unary(
      a, [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double x, double) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Var square(Var a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var abs(Var a) {
  return unary(
      a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var log_cosh(Var a) {
  // log(cosh x) = |x| + log1p(exp(-2|x|)) - log 2, stable for large |x|
  return unary(
      a,
      [](double x) {
        const double ax = std::fabs(x);
        return ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
      },
      [](double x, double) { return std::tanh(x); });
}

Var soft_clamp(Var a, double bound) {
  return unary(
      a, [bound](double x) { return bound * std::tanh(x / bound); },
      [bound](double, double y) {
        const double r = y / bound;
        return 1.0 - r * r;
      });
}

Var sum(Var a) {
  Tape& tape = tape_of(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ai = a.index();
  return tape.push(Tensor::scalar(s), tape.requires_grad({a}), [ai](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (double& v : t.grad(ai)) v += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var reshape(Var a, Shape shape) {
  Tape& tape = tape_of(a);
  Tensor y = a.value().reshaped(std::move(shape));
  const std::size_t ai = a.index();
  return tape.push(std::move(y), tape.requires_grad({a}), [ai](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    auto& gx = t.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
  });
}

Var detach(Var a) { return tape_of(a).constant(a.value()); }

Var concat_last(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_last of nothing");
  Tape& tape = tape_of(parts[0]);
  Shape lead = parts[0].shape();
  if (lead.empty()) throw DimensionError("concat_last on scalars");
  lead.pop_back();
  const std::size_t rows = shape_size(lead);
  std::vector<std::size_t> widths;
  std::vector<std::size_t> indices;
  std::size_t total = 0;
  bool needs = false;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p);
    Shape s = p.shape();
    const std::size_t w = s.back();
    s.pop_back();
    if (s != lead) throw DimensionError("concat_last: leading dims differ");
    widths.push_back(w);
    indices.push_back(p.index());
    total += w;
    needs = needs || tape.requires_grad({p});
  }
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor y(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(pv.values().data() + r * widths[k], widths[k], y.values().data() + r * total + offset);
    }
    offset += widths[k];
  }
  return tape.push(std::move(y), needs, [indices, widths, rows, total](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (t.requires_grad(indices[k])) {
        auto& gp = t.grad(indices[k]);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < widths[k]; ++j) gp[r * widths[k] + j] += gy[r * total + off + j];
        }
      }
      off += widths[k];
    }
  });
}

Var slice_last(Var a, std::size_t begin, std::size_t count) {
  Tape& tape = tape_of(a);
  Shape s = a.shape();
  if (s.empty() || begin + count > s.back()) {
    throw DimensionError("slice_last out of range on " + shape_string(s));
  }
  const std::size_t width = s.back();
  const std::size_t rows = a.value().size() / width;
  s.back() = count;
  Tensor y(s);
  const auto& av = a.value().values();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.data() + r * width + begin, count, y.values().data() + r * count);
  }
  const std::size_t ai = a.index();
  return tape.push(std::move(y), tape.requires_grad({a}), [ai, rows, width, begin, count](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    auto& ga = t.grad(ai);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < count; ++j) ga[r * width + begin + j] += gy[r * count + j];
    }
  });
}

Var time_step(Var seq, std::size_t step) {
  const auto [n, steps, c] = seq_dims(seq, "time_step");
  if (step >= steps) throw DimensionError("time_step index out of range");
  Tape& tape = tape_of(seq);
  Tensor y({n, c});
  const auto& sv = seq.value().values();
  for (std::size_t b = 0; b < n; ++b) {
    std::copy_n(sv.data() + (b * steps + step) * c, c, y.values().data() + b * c);
  }
  const std::size_t si = seq.index();
  return tape.push(std::move(y), tape.requires_grad({seq}), [si, n, steps, c, step](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    auto& gs = t.grad(si);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t j = 0; j < c; ++j) gs[(b * steps + step) * c + j] += gy[b * c + j];
    }
  });
}

Var stack_time(const std::vector<Var>& steps) {
  if (steps.empty()) throw ContractError("stack_time of nothing");
  Tape& tape = tape_of(steps[0]);
  require_rank(steps[0], 2, "stack_time");
  const std::size_t n = steps[0].dim(0), c = steps[0].dim(1), len = steps.size();
  std::vector<std::size_t> indices;
  bool needs = false;
  Tensor y({n, len, c});
  for (std::size_t s = 0; s < len; ++s) {
    require_same_tape(steps[0], steps[s]);
    if (steps[s].shape() != steps[0].shape()) throw DimensionError("stack_time: step shapes differ");
    indices.push_back(steps[s].index());
    needs = needs || tape.requires_grad({steps[s]});
    const auto& sv = steps[s].value().values();
    for (std::size_t b = 0; b < n; ++b) std::copy_n(sv.data() + b * c, c, y.values().data() + (b * len + s) * c);
  }
  return tape.push(std::move(y), needs, [indices, n, len, c](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    for (std::size_t s = 0; s < len; ++s) {
      if (!t.requires_grad(indices[s])) continue;
      auto& gs = t.grad(indices[s]);
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t j = 0; j < c; ++j) gs[b * c + j] += gy[(b * len + s) * c + j];
      }
    }
  });
}

Var reverse_time(Var seq) {
  const auto [n, steps, c] = seq_dims(seq, "reverse_time");
  Tape& tape = tape_of(seq);
  Tensor y({n, steps, c});
  const auto& sv = seq.value().values();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t s = 0; s < steps; ++s) {
      std::copy_n(sv.data() + (b * steps + s) * c, c, y.values().data() + (b * steps + steps - 1 - s) * c);
    }
  }
  const std::size_t si = seq.index();
  return tape.push(std::move(y), tape.requires_grad({seq}), [si, n, steps, c](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    auto& gs = t.grad(si);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t j = 0; j < c; ++j) gs[(b * steps + s) * c + j] += gy[(b * steps + steps - 1 - s) * c + j];
      }
    }
  });
}

Var max_over_time(Var seq) {
  const auto [n, steps, c] = seq_dims(seq, "max_over_time");
  if (steps == 0) throw DimensionError("max_over_time on empty sequence");
  Tape& tape = tape_of(seq);
  Tensor y({n, c});
  std::vector<std::size_t> argmax(n * c);
  const auto& sv = seq.value().values();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t j = 0; j < c; ++j) {
      std::size_t best = 0;
      for (std::size_t s = 1; s < steps; ++s) {
        if (sv[(b * steps + s) * c + j] > sv[(b * steps + best) * c + j]) best = s;
      }
      argmax[b * c + j] = (b * steps + best) * c + j;
      y[b * c + j] = sv[argmax[b * c + j]];
    }
  }
  const std::size_t si = seq.index();
  return tape.push(std::move(y), tape.requires_grad({seq}), [si, argmax = std::move(argmax)](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    auto& gs = t.grad(si);
    for (std::size_t k = 0; k < argmax.size(); ++k) gs[argmax[k]] += gy[k];
  });
}

Var mean_over_time(Var seq) {
  const auto [n, steps, c] = seq_dims(seq, "mean_over_time");
  if (steps == 0) throw DimensionError("mean_over_time on empty sequence");
  Tape& tape = tape_of(seq);
  Tensor y({n, c});
  const auto& sv = seq.value().values();
  const double inv = 1.0 / static_cast<double>(steps);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t s = 0; s < steps; ++s) {
      for (std::size_t j = 0; j < c; ++j) y[b * c + j] += inv * sv[(b * steps + s) * c + j];
    }
  }
  const std::size_t si = seq.index();
  return tape.push(std::move(y), tape.requires_grad({seq}), [si, n, steps, c, inv](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    auto& gs = t.grad(si);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t j = 0; j < c; ++j) gs[(b * steps + s) * c + j] += inv * gy[b * c + j];
      }
    }
  });
}

Var repeat_time(Var x, std::size_t steps) {
  require_rank(x, 2, "repeat_time");
  const std::size_t n = x.dim(0), c = x.dim(1);
  Tape& tape = tape_of(x);
  Tensor y({n, steps, c});
  const auto& xv = x.value().values();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t s = 0; s < steps; ++s) std::copy_n(xv.data() + b * c, c, y.values().data() + (b * steps + s) * c);
  }
  const std::size_t xi = x.index();
  return tape.push(std::move(y), tape.requires_grad({x}), [xi, n, steps, c](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    auto& gx = t.grad(xi);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t j = 0; j < c; ++j) gx[b * c + j] += gy[(b * steps + s) * c + j];
      }
    }
  });
}

Var max_pool_time(Var seq, std::size_t pool) {
  const auto [n, steps, c] = seq_dims(seq, "max_pool_time");
  if (pool == 0 || steps < pool) throw DimensionError("max_pool_time: pool larger than sequence");
  const std::size_t out_steps = steps / pool;
  Tape& tape = tape_of(seq);
  Tensor y({n, out_steps, c});
  std::vector<std::size_t> argmax(y.size());
  const auto& sv = seq.value().values();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < out_steps; ++o) {
      for (std::size_t j = 0; j < c; ++j) {
        std::size_t best = (b * steps + o * pool) * c + j;
        for (std::size_t p = 1; p < pool; ++p) {
          const std::size_t idx = (b * steps + o * pool + p) * c + j;
          if (sv[idx] > sv[best]) best = idx;
        }
        const std::size_t out = (b * out_steps + o) * c + j;
        argmax[out] = best;
        y[out] = sv[best];
      }
    }
  }
  const std::size_t si = seq.index();
  return tape.push(std::move(y), tape.requires_grad({seq}), [si, argmax = std::move(argmax)](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    auto& gs = t.grad(si);
    for (std::size_t k = 0; k < argmax.size(); ++k) gs[argmax[k]] += gy[k];
  });
}

Var avg_pool_time(Var seq, std::size_t pool) {
  const auto [n, steps, c] = seq_dims(seq, "avg_pool_time");
  if (pool == 0 || steps < pool) throw DimensionError("avg_pool_time: pool larger than sequence");
  const std::size_t out_steps = steps / pool;
  Tape& tape = tape_of(seq);
  Tensor y({n, out_steps, c});
  const auto& sv = seq.value().values();
  const double inv = 1.0 / static_cast<double>(pool);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < out_steps; ++o) {
      for (std::size_t p = 0; p < pool; ++p) {
        for (std::size_t j = 0; j < c; ++j) y[(b * out_steps + o) * c + j] += inv * sv[(b * steps + o * pool + p) * c + j];
      }
    }
  }
  const std::size_t si = seq.index();
  return tape.push(std::move(y), tape.requires_grad({seq}),
                   [si, n, steps, c, pool, out_steps, inv](Tape& t, std::size_t self) {
                     const auto& gy = t.grad(self);
                     auto& gs = t.grad(si);
                     for (std::size_t b = 0; b < n; ++b) {
                       for (std::size_t o = 0; o < out_steps; ++o) {
                         for (std::size_t p = 0; p < pool; ++p) {
                           for (std::size_t j = 0; j < c; ++j) {
                             gs[(b * steps + o * pool + p) * c + j] += inv * gy[(b * out_steps + o) * c + j];
                           }
                         }
                       }
                     }
                   });
}

Var upsample_time(Var seq, std::size_t factor) {
  const auto [n, steps, c] = seq_dims(seq, "upsample_time");
  if (factor == 0) throw DimensionError("upsample_time: zero factor");
  const std::size_t out_steps = steps * factor;
  Tape& tape = tape_of(seq);
  Tensor y({n, out_steps, c});
  const auto& sv = seq.value().values();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < out_steps; ++o) {
      std::copy_n(sv.data() + (b * steps + o / factor) * c, c, y.values().data() + (b * out_steps + o) * c);
    }
  }
  const std::size_t si = seq.index();
  return tape.push(std::move(y), tape.requires_grad({seq}), [si, n, steps, c, factor, out_steps](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    auto& gs = t.grad(si);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t o = 0; o < out_steps; ++o) {
        for (std::size_t j = 0; j < c; ++j) gs[(b * steps + o / factor) * c + j] += gy[(b * out_steps + o) * c + j];
      }
    }
  });
}

}  // namespace tsad::numkit
