#include "nero/kernels.hpp"

// Reference kernels. Plain sequential loops with a fixed accumulation
// order; the AVX2 variants are tested for agreement against these.

namespace nero::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double sumsq_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void vadd_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void vsub_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void vmul_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void relu_scaled_scalar(const double* x, double* out, std::size_t n,
                        double gain) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? gain * x[i] : 0.0;
}

void relu_scaled_grad_scalar(const double* x, const double* gy, double* gx,
                             std::size_t n, double gain) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > 0.0) gx[i] += gain * gy[i];
}

// i-k-j order: each C[i][j] accumulates over k sequentially.
void matmul_nn_scalar(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = arow[kk];
      const double* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
}

void matmul_nt_scalar(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j)
      crow[j] += dot_scalar(arow, b + j * k, k);
  }
}

void matmul_tn_scalar(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double* arow = a + kk * m;
    const double* brow = b + kk * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double aki = arow[i];
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aki * brow[j];
    }
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      dot_scalar,         sum_scalar,       sumsq_scalar,
      axpy_scalar,        scal_scalar,      vadd_scalar,
      vsub_scalar,        vmul_scalar,      relu_scaled_scalar,
      relu_scaled_grad_scalar, matmul_nn_scalar, matmul_nt_scalar,
      matmul_tn_scalar,
  };
  return ops;
}

}  // namespace nero::kernels
