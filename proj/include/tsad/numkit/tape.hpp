#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsad/numkit/param_store.hpp"
#include "tsad/numkit/tensor.hpp"

namespace tsad::numkit {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t axis) const { return value().dim(axis); }
  double item() const { return value().item(); }

  Tape* tape() const noexcept { return tape_; }
  std::size_t index() const noexcept { return index_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Append-only record of forward operations. Nodes are stored in creation
/// order, which is a topological order, so backward() is a reverse sweep.
///
/// A tape constructed with record_gradients=false keeps values only; use it
/// for inference.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a parameter; repeated calls for the same parameter return
  /// the same node.
  Var param(ParamStore& store, const std::string& name);

  /// Reverse sweep from a scalar loss. Every parameter of every store touched
  /// by this tape gets a fresh gradient: d(loss)/d(param) when reachable,
  /// zeros otherwise.
  void backward(Var loss);

  bool recording() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Interface for operation implementations.
  const Tensor& value(std::size_t index) const { return nodes_[index].value; }
  bool requires_grad(std::size_t index) const { return nodes_[index].requires_grad; }
  bool requires_grad(std::initializer_list<Var> vars) const;
  /// Gradient buffer of a node, allocated as zeros on first use.
  std::vector<double>& grad(std::size_t index);
  Var push(Tensor value, bool requires_grad, Backprop backprop);

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    Tensor* param = nullptr;
    bool requires_grad = false;
    Backprop backprop;
  };

  std::deque<Node> nodes_;  // deque: values stay put as nodes are appended
  std::unordered_map<const Tensor*, std::size_t> param_nodes_;
  std::vector<ParamStore*> stores_;
  bool record_;
};

}  // namespace tsad::numkit
