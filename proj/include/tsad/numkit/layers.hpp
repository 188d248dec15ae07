#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "tsad/numkit/ops.hpp"
#include "tsad/numkit/param_store.hpp"

namespace tsad::numkit {

/// y = x W + b for x [N x Din], W [Din x Dout], b [Dout].
Var linear_forward(Var x, Var weight, Var bias);

struct LstmParams {
  Var input_weight;      // [D x 4H], gate order: input, forget, candidate, output
  Var recurrent_weight;  // [H x 4H]
  Var bias;              // [4H]
};

struct LstmState {
  Var h;  // [N x H]
  Var c;  // [N x H]
};

/// One step of a standard LSTM cell on a batch. x is [N x D].
LstmState lstm_cell_step(Var x, const LstmState& state, const LstmParams& params);

/// Causal dilated convolution without bias. x is [T x Cin] or [N x T x Cin];
/// kernel is [k x Cin x Cout] where tap j reads the input j * dilation steps
/// in the past. Inputs before t = 0 are zero.
Var dilated_causal_conv1d(Var x, Var kernel, std::size_t dilation);

// Parameter declaration helpers. Weights use U(+-1/sqrt(fan_in)).

void declare_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out);
Var linear(Tape& tape, ParamStore& store, const std::string& prefix, Var x);

/// Forget-gate bias starts at 1.
void declare_lstm(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden);
LstmParams lstm_params(Tape& tape, ParamStore& store, const std::string& prefix);

void declare_conv(ParamStore& store, const std::string& prefix, std::size_t kernel, std::size_t in, std::size_t out,
                  bool with_bias = true);
/// Causal convolution over [N x T x Cin] plus bias when declared.
Var conv(Tape& tape, ParamStore& store, const std::string& prefix, Var x, std::size_t dilation);

}  // namespace tsad::numkit
