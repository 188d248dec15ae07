#pragma once

#include <cstddef>
#include <vector>

#include "tsad/numkit/tape.hpp"

// Differentiable primitives. Binary element-wise ops require equal shapes;
// the only broadcast supported is add_bias over the last axis. Sequence ops
// take [N, T, C] tensors (batch, time, channels).

namespace tsad::numkit {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_bias(Var x, Var bias);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);

/// [N x K] * [K x M]
Var matmul(Var a, Var b);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope = 0.2);
Var exp(Var a);
Var log(Var a);
Var softplus(Var a);
Var square(Var a);
Var abs(Var a);
Var log_cosh(Var a);
/// bound * tanh(a / bound): smooth clamp into (-bound, bound).
Var soft_clamp(Var a, double bound);

Var sum(Var a);
Var mean(Var a);

Var reshape(Var a, Shape shape);
/// Copy of the value with no gradient path.
Var detach(Var a);

/// Concatenate along the last axis; leading dims must agree.
Var concat_last(const std::vector<Var>& parts);
/// Columns [begin, begin + count) of the last axis.
Var slice_last(Var a, std::size_t begin, std::size_t count);

// [N, T, C] sequence helpers.
Var time_step(Var seq, std::size_t t);                 // -> [N, C]
Var stack_time(const std::vector<Var>& steps);         // [N, C] each -> [N, T, C]
Var reverse_time(Var seq);
Var max_over_time(Var seq);                            // -> [N, C]
Var mean_over_time(Var seq);                           // -> [N, C]
Var repeat_time(Var x, std::size_t steps);             // [N, C] -> [N, steps, C]
Var max_pool_time(Var seq, std::size_t pool);          // T -> T / pool (remainder dropped)
Var avg_pool_time(Var seq, std::size_t pool);
Var upsample_time(Var seq, std::size_t factor);        // nearest-neighbour repeat

}  // namespace tsad::numkit
