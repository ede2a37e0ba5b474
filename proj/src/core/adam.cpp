#include "acm/core/adam.hpp"

#include <cmath>

#include "acm/core/error.hpp"

namespace acm::core {

Adam::Adam(ParameterStore& params, AdamConfig config) : params_(params), config_(config) {
  for (auto& [name, t] : params_) {
    t.ensure_grad();
    moments_[name] = {std::vector<double>(t.size(), 0.0), std::vector<double>(t.size(), 0.0)};
  }
}

void Adam::step(double grad_scale) {
  ++step_;
  const double inv_scale = 1.0 / grad_scale;
  double norm_sq = 0.0;
  for (auto& [name, t] : params_) {
    for (double g : t.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient for parameter " + name);
      norm_sq += (g * inv_scale) * (g * inv_scale);
    }
  }
  double clip = 1.0;
  if (config_.clip_norm > 0.0) {
    const double norm = std::sqrt(norm_sq);
    if (norm > config_.clip_norm) clip = config_.clip_norm / norm;
  }
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (auto& [name, p] : params_) {
    Moments& mo = moments_.at(name);
    auto grad = p.grad();
    auto data = p.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = grad[i] * inv_scale * clip;
      mo.m[i] = config_.beta1 * mo.m[i] + (1.0 - config_.beta1) * g;
      mo.v[i] = config_.beta2 * mo.v[i] + (1.0 - config_.beta2) * g * g;
      const double mhat = mo.m[i] / bc1;
      const double vhat = mo.v[i] / bc2;
      data[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
    p.zero_grad();
  }
}

}  // namespace acm::core
