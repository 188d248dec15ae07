#include "tsad/numkit/param_store.hpp"

#include <cmath>

#include "tsad/errors.hpp"
#include "tsad/numkit/rng.hpp"

namespace tsad::numkit {

Tensor& ParamStore::add(const std::string& name, Shape shape, Init init) {
  Tensor t(std::move(shape));
  switch (init.kind) {
    case Init::Kind::Zeros:
      break;
    case Init::Kind::Constant:
      for (double& v : t.values()) v = init.value;
      break;
    case Init::Kind::UniformFanIn: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(init.fan_in == 0 ? 1 : init.fan_in));
      Rng rng(seed_, "param/" + name);
      for (double& v : t.values()) v = rng.uniform(-bound, bound);
      break;
    }
  }
  return insert(name, std::move(t));
}

Tensor& ParamStore::insert(const std::string& name, Tensor value) {
  if (index_.contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, std::move(value));
  return entries_.back().second;
}

bool ParamStore::contains(std::string_view name) const { return index_.contains(std::string(name)); }

Tensor& ParamStore::get(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].second;
}

const Tensor& ParamStore::get(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::vector<std::string> ParamStore::names_with_prefix(std::string_view prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) {
    if (name.starts_with(prefix)) out.push_back(name);
  }
  return out;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : entries_) t.zero_grad();
}

void ParamStore::clear_grad() {
  for (auto& [_, t] : entries_) t.clear_grad();
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first != other.entries_[i].first) return false;
    if (!entries_[i].second.same_values(other.entries_[i].second)) return false;
  }
  return true;
}

}  // namespace tsad::numkit
