#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tsad/numkit/tensor.hpp"

namespace tsad::numkit {

/// How a parameter tensor is filled when it is declared.
struct Init {
  enum class Kind { Zeros, Constant, UniformFanIn };
  Kind kind = Kind::Zeros;
  double value = 0.0;        // Constant
  std::size_t fan_in = 1;    // UniformFanIn: U(-1/sqrt(fan_in), 1/sqrt(fan_in))

  static Init zeros() { return {}; }
  static Init constant(double v) { return {Kind::Constant, v, 1}; }
  static Init uniform_fan_in(std::size_t fan_in) { return {Kind::UniformFanIn, 0.0, fan_in}; }
};

/// Named parameters in declaration order. Initial values depend only on the
/// store seed and each parameter's name, so declaration order does not
/// affect them.
///
/// References returned by get() stay valid until the next add().
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  Tensor& add(const std::string& name, Shape shape, Init init);
  /// Inserts an existing tensor (used by deserialization).
  Tensor& insert(const std::string& name, Tensor value);

  bool contains(std::string_view name) const;
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;

  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(std::string_view prefix) const;
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;
  std::uint64_t seed() const noexcept { return seed_; }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grad();
  void clear_grad();

  /// Element-wise identical names, shapes and values.
  bool same_values(const ParamStore& other) const;

 private:
  std::uint64_t seed_;
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace tsad::numkit
