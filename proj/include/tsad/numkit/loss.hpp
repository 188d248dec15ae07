#pragma once

#include "tsad/numkit/ops.hpp"

namespace tsad::numkit {

enum class LossKind { MSE, MAE, LogCosh };

/// Mean over all elements of the per-element error penalty.
Var loss(Var pred, Var target, LossKind kind);

/// mean(softplus(logit) - target * logit); target in {0, 1}.
Var bce_with_logits(Var logits, Var target);

/// Element-wise -log N(x; mean, exp(log_var)).
Var gaussian_nll(Var x, Var mean, Var log_var);

/// Element-wise KL(N(mq, exp(lvq)) || N(mp, exp(lvp))).
Var kl_diag_gaussian(Var mean_q, Var log_var_q, Var mean_p, Var log_var_p);

}  // namespace tsad::numkit
