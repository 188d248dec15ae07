#include "tsad/numkit/loss.hpp"

#include <cmath>
#include <numbers>

#include "tsad/errors.hpp"

namespace tsad::numkit {

Var loss(Var pred, Var target, LossKind kind) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("loss: prediction " + shape_string(pred.shape()) + " vs target " +
                         shape_string(target.shape()));
  }
  Var err = sub(pred, target);
  switch (kind) {
    case LossKind::MSE:
      return mean(square(err));
    case LossKind::MAE:
      return mean(abs(err));
    case LossKind::LogCosh:
      return mean(log_cosh(err));
  }
  throw ConfigError("unknown loss kind");
}

Var bce_with_logits(Var logits, Var target) {
  return mean(sub(softplus(logits), mul(target, logits)));
}

Var gaussian_nll(Var x, Var mean, Var log_var) {
  Var sq = square(sub(x, mean));
  Var weighted = mul(sq, exp(scale(log_var, -1.0)));
  return scale(add_scalar(add(log_var, weighted), std::log(2.0 * std::numbers::pi)), 0.5);
}

Var kl_diag_gaussian(Var mean_q, Var log_var_q, Var mean_p, Var log_var_p) {
  Var inv_var_p = exp(scale(log_var_p, -1.0));
  Var ratio = mul(add(exp(log_var_q), square(sub(mean_q, mean_p))), inv_var_p);
  return scale(add_scalar(add(sub(log_var_p, log_var_q), ratio), -1.0), 0.5);
}

}  // namespace tsad::numkit
