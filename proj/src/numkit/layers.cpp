#include "tsad/numkit/layers.hpp"

#include <Eigen/Core>
#include <cmath>

#include "tsad/errors.hpp"

namespace tsad::numkit {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

void require_finite(const Tensor& t, const char* what) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite input");
  }
}

}  // namespace

Var linear_forward(Var x, Var weight, Var bias) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[0] || bias.value().size() != ws[1]) {
    throw DimensionError("linear_forward: x " + shape_string(xs) + ", W " + shape_string(ws) + ", b " +
                         shape_string(bias.shape()));
  }
  return add_bias(matmul(x, weight), bias);
}

LstmState lstm_cell_step(Var x, const LstmState& state, const LstmParams& params) {
  require_finite(x.value(), "lstm_cell_step");
  const std::size_t hidden = state.h.dim(1);
  if (params.recurrent_weight.dim(0) != hidden || params.recurrent_weight.dim(1) != 4 * hidden ||
      params.input_weight.dim(0) != x.dim(1) || params.input_weight.dim(1) != 4 * hidden ||
      params.bias.value().size() != 4 * hidden || state.c.shape() != state.h.shape()) {
    throw DimensionError("lstm_cell_step: x " + shape_string(x.shape()) + ", h " + shape_string(state.h.shape()) +
                         ", W " + shape_string(params.input_weight.shape()) + ", U " +
                         shape_string(params.recurrent_weight.shape()));
  }
  Var z = add_bias(add(matmul(x, params.input_weight), matmul(state.h, params.recurrent_weight)), params.bias);
  Var in_gate = sigmoid(slice_last(z, 0, hidden));
  Var forget_gate = sigmoid(slice_last(z, hidden, hidden));
  Var candidate = tanh(slice_last(z, 2 * hidden, hidden));
  Var out_gate = sigmoid(slice_last(z, 3 * hidden, hidden));
  Var c = add(mul(forget_gate, state.c), mul(in_gate, candidate));
  Var h = mul(out_gate, tanh(c));
  return {h, c};
}

Var dilated_causal_conv1d(Var x, Var kernel, std::size_t dilation) {
  if (dilation == 0) throw ContractError("dilated_causal_conv1d: dilation must be >= 1");
  const Shape& ks = kernel.shape();
  if (ks.size() != 3) throw DimensionError("dilated_causal_conv1d: kernel must be [k x Cin x Cout], got " + shape_string(ks));
  const bool batched = x.value().rank() == 3;
  if (!batched && x.value().rank() != 2) {
    throw DimensionError("dilated_causal_conv1d: input must be [T x Cin] or [N x T x Cin], got " + shape_string(x.shape()));
  }
  const std::size_t n = batched ? x.dim(0) : 1;
  const std::size_t steps = batched ? x.dim(1) : x.dim(0);
  const std::size_t cin = x.shape().back();
  const std::size_t taps = ks[0], cout = ks[2];
  if (ks[1] != cin) {
    throw DimensionError("dilated_causal_conv1d: input " + shape_string(x.shape()) + " vs kernel " + shape_string(ks));
  }
  // padded length steps + (taps-1)*dilation must cover the kernel span
  if (taps == 0 || steps == 0) {
    throw DimensionError("dilated_causal_conv1d: kernel wider than padded input " + shape_string(x.shape()));
  }

  Tape& tape = *x.tape();
  Tensor y(batched ? Shape{n, steps, cout} : Shape{steps, cout});
  const double* xv = x.value().values().data();
  const double* kv = kernel.value().values().data();
  for (std::size_t b = 0; b < n; ++b) {
    CMapMat xb(xv + b * steps * cin, steps, cin);
    MapMat yb(y.values().data() + b * steps * cout, steps, cout);
    for (std::size_t j = 0; j < taps; ++j) {
      const std::size_t lag = j * dilation;
      if (lag >= steps) break;
      CMapMat wj(kv + j * cin * cout, cin, cout);
      yb.bottomRows(steps - lag).noalias() += xb.topRows(steps - lag) * wj;
    }
  }
  const std::size_t xi = x.index(), ki = kernel.index();
  return tape.push(std::move(y), tape.requires_grad({x, kernel}),
                   [xi, ki, n, steps, cin, cout, taps, dilation](Tape& t, std::size_t self) {
                     const double* gy = t.grad(self).data();
                     const bool gx_needed = t.requires_grad(xi);
                     const bool gk_needed = t.requires_grad(ki);
                     double* gx = gx_needed ? t.grad(xi).data() : nullptr;
                     double* gk = gk_needed ? t.grad(ki).data() : nullptr;
                     const double* xv2 = t.value(xi).values().data();
                     const double* kv2 = t.value(ki).values().data();
                     for (std::size_t b = 0; b < n; ++b) {
                       CMapMat gyb(gy + b * steps * cout, steps, cout);
                       for (std::size_t j = 0; j < taps; ++j) {
                         const std::size_t lag = j * dilation;
                         if (lag >= steps) break;
                         if (gx_needed) {
                           MapMat(gx + b * steps * cin, steps, cin).topRows(steps - lag).noalias() +=
                               gyb.bottomRows(steps - lag) * CMapMat(kv2 + j * cin * cout, cin, cout).transpose();
                         }
                         if (gk_needed) {
                           MapMat(gk + j * cin * cout, cin, cout).noalias() +=
                               CMapMat(xv2 + b * steps * cin, steps, cin).topRows(steps - lag).transpose() *
                               gyb.bottomRows(steps - lag);
                         }
                       }
                     }
                   });
}

void declare_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out) {
  store.add(prefix + "/W", {in, out}, Init::uniform_fan_in(in));
  store.add(prefix + "/b", {out}, Init::uniform_fan_in(in));
}

Var linear(Tape& tape, ParamStore& store, const std::string& prefix, Var x) {
  return linear_forward(x, tape.param(store, prefix + "/W"), tape.param(store, prefix + "/b"));
}

void declare_lstm(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden) {
  store.add(prefix + "/W", {in, 4 * hidden}, Init::uniform_fan_in(hidden));
  store.add(prefix + "/U", {hidden, 4 * hidden}, Init::uniform_fan_in(hidden));
  Tensor& bias = store.add(prefix + "/b", {4 * hidden}, Init::uniform_fan_in(hidden));
  for (std::size_t j = hidden; j < 2 * hidden; ++j) bias[j] = 1.0;
}

LstmParams lstm_params(Tape& tape, ParamStore& store, const std::string& prefix) {
  return {tape.param(store, prefix + "/W"), tape.param(store, prefix + "/U"), tape.param(store, prefix + "/b")};
}

void declare_conv(ParamStore& store, const std::string& prefix, std::size_t kernel, std::size_t in, std::size_t out,
                  bool with_bias) {
  store.add(prefix + "/K", {kernel, in, out}, Init::uniform_fan_in(kernel * in));
  if (with_bias) store.add(prefix + "/b", {out}, Init::uniform_fan_in(kernel * in));
}

Var conv(Tape& tape, ParamStore& store, const std::string& prefix, Var x, std::size_t dilation) {
  Var y = dilated_causal_conv1d(x, tape.param(store, prefix + "/K"), dilation);
  if (store.contains(prefix + "/b")) y = add_bias(y, tape.param(store, prefix + "/b"));
  return y;
}

}  // namespace tsad::numkit
