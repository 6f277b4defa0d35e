#include "nero/tensor.hpp"

#include <cmath>
#include <string>

#include "nero/errors.hpp"
#include "nero/kernels.hpp"

namespace nero {

namespace {
std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t p = 1;
  for (std::size_t s : shape) {
    if (s == 0) throw DimensionError("tensor shape has a zero dimension");
    p *= s;
  }
  return p;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size())
    throw DimensionError("tensor data length does not match shape");
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vector(std::initializer_list<double> v) {
  return Tensor({v.size()}, std::vector<double>(v));
}

Tensor Tensor::matrix(std::size_t r, std::size_t c,
                      std::initializer_list<double> v) {
  return Tensor({r, c}, std::vector<double>(v));
}

Tensor Tensor::zeros_like(const Tensor& t) { return Tensor(t.shape_); }

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) throw DimensionError("rows(): tensor is not 2-d");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) throw DimensionError("cols(): tensor is not 2-d");
  return shape_[1];
}

std::span<double> Tensor::row(std::size_t i) {
  return {data_.data() + i * cols(), cols()};
}

std::span<const double> Tensor::row(std::size_t i) const {
  return {data_.data() + i * cols(), cols()};
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

double Tensor::item() const {
  if (data_.size() != 1)
    throw DimensionError("item(): tensor has " + std::to_string(data_.size()) +
                         " elements, expected 1");
  return data_[0];
}

void Tensor::ensure_finite(const char* what) const {
  for (double x : data_)
    if (!std::isfinite(x))
      throw NumericalError(std::string("non-finite value produced by ") + what);
}

double Tensor::frobenius_norm() const {
  return std::sqrt(kernels::ops().sumsq(data_.data(), data_.size()));
}

}  // namespace nero
