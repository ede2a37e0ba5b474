#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "acm/core/rng.hpp"
#include "acm/core/tensor.hpp"

namespace acm::core {

/// Named, ordered collection of trainable tensors.
///
/// Elements live in a std::map, so references handed out by add() stay valid
/// for the lifetime of the store, including across moves of the store.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  Tensor& add(const std::string& name, Tensor value);
  /// Normal(0, stddev) initialised parameter.
  Tensor& add_normal(const std::string& name, Shape shape, double stddev, Rng& rng);
  Tensor& add_constant(const std::string& name, Shape shape, double value);

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.contains(name); }

  std::size_t size() const { return params_.size(); }
  std::size_t element_count() const;
  void zero_grad();

  /// Copies values (not gradients) from another store with identical names and shapes.
  void copy_values_from(const ParameterStore& other);
  /// Value-only snapshot.
  std::map<std::string, Tensor> snapshot() const;
  void restore(const std::map<std::string, Tensor>& snap);

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Tensor> params_;
};

}  // namespace acm::core
