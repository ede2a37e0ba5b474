#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "acm/core/parameters.hpp"

namespace acm::core {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global gradient-norm clip; 0 disables clipping.
  double clip_norm = 0.0;
};

/// Adam over every tensor of a ParameterStore.
class Adam {
 public:
  Adam(ParameterStore& params, AdamConfig config);

  /// Applies one update from the accumulated gradients, divided by `grad_scale`,
  /// then zeroes them. Throws NumericError on a non-finite gradient.
  void step(double grad_scale = 1.0);
  std::uint64_t steps() const { return step_; }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };

  ParameterStore& params_;
  AdamConfig config_;
  std::map<std::string, Moments> moments_;
  std::uint64_t step_ = 0;
};

}  // namespace acm::core
