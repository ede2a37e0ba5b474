#include "acm/core/parameters.hpp"

#include "acm/core/error.hpp"

namespace acm::core {

Tensor& ParameterStore::add(const std::string& name, Tensor value) {
  auto [it, inserted] = params_.emplace(name, std::move(value));
  if (!inserted) throw ConfigError("duplicate parameter name: " + name);
  return it->second;
}

Tensor& ParameterStore::add_normal(const std::string& name, Shape shape, double stddev,
                                   Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = stddev * rng.normal();
  return add(name, std::move(t));
}

Tensor& ParameterStore::add_constant(const std::string& name, Shape shape, double value) {
  return add(name, Tensor(std::move(shape), value));
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw DataError("missing parameter: " + name);
  return it->second;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw DataError("missing parameter: " + name);
  return it->second;
}

std::size_t ParameterStore::element_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  for (auto& [name, t] : params_) {
    const Tensor& src = other.get(name);
    if (!src.same_shape(t)) throw DimensionError("parameter shape mismatch for " + name);
    std::copy(src.data().begin(), src.data().end(), t.data().begin());
  }
}

std::map<std::string, Tensor> ParameterStore::snapshot() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, t] : params_) out.emplace(name, Tensor(t.shape(), t.storage()));
  return out;
}

void ParameterStore::restore(const std::map<std::string, Tensor>& snap) {
  for (auto& [name, t] : params_) {
    auto it = snap.find(name);
    if (it == snap.end()) throw DataError("snapshot lacks parameter " + name);
    if (!it->second.same_shape(t)) throw DimensionError("snapshot shape mismatch for " + name);
    std::copy(it->second.data().begin(), it->second.data().end(), t.data().begin());
  }
}

}  // namespace acm::core
