#include "acm/core/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace acm::core::kernels {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440084436210484904;
}  // namespace

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.data() + i * n;
    const double* ai = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      c[i * n + j] += acc;
    }
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    const double* bi = b.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      double* cp = c.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
    }
  }
}

void softmax_row(std::span<double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  double total = 0.0;
  for (double& v : row) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : row) v /= total;
}

double log_sum_exp(std::span<const double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  double total = 0.0;
  for (double v : row) total += std::exp(v - mx);
  return mx + std::log(total);
}

NormStats norm_stats(std::span<const double> row, double eps) {
  const double n = static_cast<double>(row.size());
  double mean = 0.0;
  for (double v : row) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : row) var += (v - mean) * (v - mean);
  var /= n;
  return {mean, 1.0 / std::sqrt(std::max(var, eps))};
}

void layer_norm_row(std::span<const double> in, std::span<const double> gain,
                    std::span<const double> bias, std::span<double> out, double eps) {
  const NormStats s = norm_stats(in, eps);
  for (std::size_t j = 0; j < in.size(); ++j) {
    out[j] = (in[j] - s.mean) * s.inv_std * gain[j] + bias[j];
  }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi * kInvSqrt2;
  return cdf + x * pdf;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace acm::core::kernels
