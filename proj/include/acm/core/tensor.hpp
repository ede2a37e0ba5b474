#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace acm::core {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor of 64-bit floats with an optional gradient buffer.
///
/// The gradient buffer is absent until ensure_grad() is called; when present
/// it always has the same number of elements as the data.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);
  static Tensor identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  /// Leading dimension of a matrix (1 for vectors and scalars).
  std::size_t rows() const;
  /// Trailing dimension (1 for scalars).
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  /// Value of a one-element tensor.
  double item() const;

  bool has_grad() const { return has_grad_; }
  void ensure_grad();
  void zero_grad();
  void drop_grad();
  std::span<double> grad() { return grad_; }
  std::span<const double> grad() const { return grad_; }

  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  Shape shape_;
  std::vector<double> data_;
  std::vector<double> grad_;
  bool has_grad_ = false;
};

/// Bitwise equality of shape and data.
bool identical(const Tensor& a, const Tensor& b);

}  // namespace acm::core
