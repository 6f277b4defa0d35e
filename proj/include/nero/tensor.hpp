#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace nero {

/// Dense row-major array of doubles. The unit of all computation.
/// Core ops validate that every produced element is finite.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor vector(std::initializer_list<double> v);
  static Tensor matrix(std::size_t r, std::size_t c,
                       std::initializer_list<double> v);
  static Tensor zeros_like(const Tensor& t);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t ndim() const { return shape_.size(); }

  std::size_t rows() const;  // 2-d only
  std::size_t cols() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

  std::span<double> row(std::size_t i);
  std::span<const double> row(std::size_t i) const;
  std::span<double> flat() { return {data_.data(), data_.size()}; }
  std::span<const double> flat() const { return {data_.data(), data_.size()}; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  void fill(double v);

  /// Value of a single-element tensor.
  double item() const;

  /// Throws NumericalError naming `what` if any element is NaN/Inf.
  void ensure_finite(const char* what) const;

  double frobenius_norm() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace nero
