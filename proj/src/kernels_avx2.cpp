// AVX2 + FMA kernels. This translation unit is compiled with
// -mavx2 -mfma and is only added to the build on x86-64; dispatch in
// kernels.cpp keeps it unused unless the CPU reports both features.

#include <immintrin.h>

#include "nero/kernels.hpp"

namespace nero::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

double sumsq_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * a[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_avx2(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void vadd_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void vsub_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void vmul_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void relu_scaled_avx2(const double* x, double* out, std::size_t n, double gain) {
  const __m256d vg = _mm256_set1_pd(gain);
  const __m256d vz = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d pos = _mm256_cmp_pd(v, vz, _CMP_GT_OQ);
    __m256d r = _mm256_and_pd(_mm256_mul_pd(vg, v), pos);
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? gain * x[i] : 0.0;
}

void relu_scaled_grad_avx2(const double* x, const double* gy, double* gx,
                           std::size_t n, double gain) {
  const __m256d vg = _mm256_set1_pd(gain);
  const __m256d vz = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d pos = _mm256_cmp_pd(_mm256_loadu_pd(x + i), vz, _CMP_GT_OQ);
    __m256d contrib =
        _mm256_and_pd(_mm256_mul_pd(vg, _mm256_loadu_pd(gy + i)), pos);
    _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), contrib));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0) gx[i] += gain * gy[i];
}

void matmul_nn_avx2(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const __m256d aik = _mm256_set1_pd(arow[kk]);
      const double* brow = b + kk * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d vc = _mm256_loadu_pd(crow + j);
        vc = _mm256_fmadd_pd(aik, _mm256_loadu_pd(brow + j), vc);
        _mm256_storeu_pd(crow + j, vc);
      }
      const double aiks = arow[kk];
      for (; j < n; ++j) crow[j] += aiks * brow[j];
    }
  }
}

void matmul_nt_avx2(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] += dot_avx2(arow, b + j * k, k);
  }
}

void matmul_tn_avx2(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t n, std::size_t k) {
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double* arow = a + kk * m;
    const double* brow = b + kk * n;
    for (std::size_t i = 0; i < m; ++i) {
      const __m256d aki = _mm256_set1_pd(arow[i]);
      double* crow = c + i * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d vc = _mm256_loadu_pd(crow + j);
        vc = _mm256_fmadd_pd(aki, _mm256_loadu_pd(brow + j), vc);
        _mm256_storeu_pd(crow + j, vc);
      }
      const double akis = arow[i];
      for (; j < n; ++j) crow[j] += akis * brow[j];
    }
  }
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops = {
      dot_avx2,         sum_avx2,       sumsq_avx2,
      axpy_avx2,        scal_avx2,      vadd_avx2,
      vsub_avx2,        vmul_avx2,      relu_scaled_avx2,
      relu_scaled_grad_avx2, matmul_nn_avx2, matmul_nt_avx2,
      matmul_tn_avx2,
  };
  return ops;
}

}  // namespace nero::kernels
