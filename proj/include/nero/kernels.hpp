#pragma once

#include <cstddef>

namespace nero::kernels {

// Double-precision inner loops used by the tensor/autodiff layer.
// Two implementations ship: a scalar reference and an AVX2+FMA variant.
// The active one is picked at startup from CPUID and can be forced for
// equivalence testing. Reductions may differ from the reference in the
// last few ulps (different accumulation order); elementwise kernels are
// bit-identical.
enum class Backend { scalar, avx2 };

struct Ops {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*sumsq)(const double* a, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scal)(double alpha, double* x, std::size_t n);
  void (*vadd)(const double* a, const double* b, double* out, std::size_t n);
  void (*vsub)(const double* a, const double* b, double* out, std::size_t n);
  void (*vmul)(const double* a, const double* b, double* out, std::size_t n);
  // out = gain * max(0, x)
  void (*relu_scaled)(const double* x, double* out, std::size_t n, double gain);
  // gx += gain * (x > 0) * gy
  void (*relu_scaled_grad)(const double* x, const double* gy, double* gx,
                           std::size_t n, double gain);
  // C[m x n] += A[m x k] * B[k x n]
  void (*matmul_nn)(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t n, std::size_t k);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*matmul_nt)(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t n, std::size_t k);
  // C[m x n] += A[k x m]^T * B[k x n]
  void (*matmul_tn)(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t n, std::size_t k);
};

bool avx2_available();
Backend active_backend();
void set_backend(Backend b);  // throws ConfigError if unsupported on this CPU
const char* backend_name(Backend b);

/// Kernel table currently in effect.
const Ops& ops();

/// Specific table, regardless of the active selection (for equivalence tests).
const Ops& ops_for(Backend b);

}  // namespace nero::kernels
