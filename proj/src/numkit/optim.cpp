#include "tsad/numkit/optim.hpp"

#include <cmath>

#include "tsad/errors.hpp"

namespace tsad::numkit {

Optimizer::Optimizer(OptimConfig config, const ParamStore& store, std::vector<std::string> names)
    : config_(config), names_(names.empty() ? store.names() : std::move(names)) {
  for (const auto& name : names_) {
    const Tensor& p = store.get(name);
    if (config_.kind == OptimizerKind::Adam) {
      first_.emplace(name, Tensor(p.shape()));
      second_.emplace(name, Tensor(p.shape()));
    }
  }
}

void Optimizer::step(ParamStore& store) {
  for (const auto& name : names_) {
    if (!store.get(name).has_grad()) throw ContractError("optimizer step: parameter '" + name + "' has no gradient");
  }
  ++step_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::GradientDescent) {
    for (const auto& name : names_) {
      Tensor& p = store.get(name);
      auto g = p.grad();
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
    }
    return;
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (const auto& name : names_) {
    Tensor& p = store.get(name);
    auto g = p.grad();
    Tensor& m = first_.at(name);
    Tensor& v = second_.at(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

double clip_grad_norm(ParamStore& store, const std::vector<std::string>& names, double max_norm) {
  double sq = 0.0;
  for (const auto& name : names) {
    for (double g : store.get(name).grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (const auto& name : names) {
      for (double& g : store.get(name).grad()) g *= factor;
    }
  }
  return norm;
}

}  // namespace tsad::numkit
