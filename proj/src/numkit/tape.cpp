#include "tsad/numkit/tape.hpp"

#include <algorithm>

#include "tsad/errors.hpp"

namespace tsad::numkit {

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("use of an empty Var");
  return tape_->value(index_);
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::param(ParamStore& store, const std::string& name) {
  Tensor& target = store.get(name);
  if (auto it = param_nodes_.find(&target); it != param_nodes_.end()) return Var(this, it->second);
  if (std::find(stores_.begin(), stores_.end(), &store) == stores_.end()) stores_.push_back(&store);
  Var v = push(target, record_, nullptr);
  nodes_[v.index()].param = &target;
  param_nodes_.emplace(&target, v.index());
  return v;
}

bool Tape::requires_grad(std::initializer_list<Var> vars) const {
  if (!record_) return false;
  return std::any_of(vars.begin(), vars.end(), [this](const Var& v) { return nodes_[v.index()].requires_grad; });
}

std::vector<double>& Tape::grad(std::size_t index) {
  Node& node = nodes_[index];
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

Var Tape::push(Tensor value, bool requires_grad, Backprop backprop) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = record_ && requires_grad;
  if (node.requires_grad) node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
  if (!record_) throw ContractError("backward on a tape that does not record gradients");
  const Tensor& lv = nodes_[loss.index()].value;
  if (lv.size() != 1) throw ContractError("backward requires a scalar loss, got " + shape_string(lv.shape()));

  for (auto& node : nodes_) node.grad.clear();
  for (ParamStore* store : stores_) store->zero_grad();

  grad(loss.index())[0] = 1.0;
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backprop) node.backprop(*this, i);
  }
  for (auto& node : nodes_) {
    if (node.param && !node.grad.empty()) {
      auto dst = node.param->grad();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += node.grad[k];
    }
  }
}

}  // namespace tsad::numkit
