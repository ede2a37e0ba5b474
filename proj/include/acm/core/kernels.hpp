#pragma once

#include <cstddef>
#include <span>

// Plain loops over contiguous row-major buffers. Shared by the autodiff ops
// and by the cache-based inference paths so both see the same arithmetic.
namespace acm::core::kernels {

/// c[m×n] += a[m×k] · b[k×n]
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
/// c[m×n] += a[m×k] · b[n×k]ᵀ
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
/// c[k×n] += a[m×k]ᵀ · b[m×n]
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);

/// In-place numerically stable softmax of one contiguous row.
void softmax_row(std::span<double> row);
/// log(sum(exp(row))) computed with max subtraction.
double log_sum_exp(std::span<const double> row);

/// Row statistics used by layer norm: the denominator is sqrt(max(var, eps)).
struct NormStats {
  double mean;
  double inv_std;
};
NormStats norm_stats(std::span<const double> row, double eps);
void layer_norm_row(std::span<const double> in, std::span<const double> gain,
                    std::span<const double> bias, std::span<double> out, double eps);

double gelu(double x);
double gelu_grad(double x);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace acm::core::kernels
