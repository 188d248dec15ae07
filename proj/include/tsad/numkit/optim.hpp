#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "tsad/numkit/param_store.hpp"

namespace tsad::numkit {

enum class OptimizerKind { GradientDescent, Adam };

struct OptimConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Optimizer state over a fixed set of parameters of one store.
///
///   gradient descent: p <- p - lr * g
///   Adam:             bias-corrected first/second moments
class Optimizer {
 public:
  /// An empty name list means every parameter of the store.
  Optimizer(OptimConfig config, const ParamStore& store, std::vector<std::string> names = {});

  /// Applies one update. Every managed parameter must carry a gradient.
  void step(ParamStore& store);

  std::size_t steps() const noexcept { return step_; }
  const OptimConfig& config() const noexcept { return config_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const Tensor& first_moment(const std::string& name) const { return first_.at(name); }
  const Tensor& second_moment(const std::string& name) const { return second_.at(name); }

 private:
  OptimConfig config_;
  std::vector<std::string> names_;
  std::map<std::string, Tensor> first_;
  std::map<std::string, Tensor> second_;
  std::size_t step_ = 0;
};

/// Rescales gradients of the named parameters so their joint L2 norm is at
/// most max_norm. Returns the norm before clipping.
double clip_grad_norm(ParamStore& store, const std::vector<std::string>& names, double max_norm);

}  // namespace tsad::numkit
