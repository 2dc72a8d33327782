#include "vsloc/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#define VSLOC_AVX2 __attribute__((target("avx2,fma")))

namespace vsloc::kernels::detail {
namespace {

VSLOC_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

VSLOC_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

VSLOC_AVX2 void axpy_avx2(double alpha, const double* x, double* y,
                          std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

VSLOC_AVX2 inline __m256d residual4(const double* y, const double* offset,
                                    const double* cols, const double* coef,
                                    std::size_t ncols, std::size_t n,
                                    std::size_t d) {
  __m256d r = _mm256_sub_pd(_mm256_loadu_pd(y + d), _mm256_loadu_pd(offset + d));
  for (std::size_t j = 0; j < ncols; ++j) {
    r = _mm256_fnmadd_pd(_mm256_set1_pd(coef[j]),
                         _mm256_loadu_pd(cols + j * n + d), r);
  }
  return r;
}

inline double residual1(const double* y, const double* offset,
                        const double* cols, const double* coef,
                        std::size_t ncols, std::size_t n, std::size_t d) {
  double r = y[d] - offset[d];
  for (std::size_t j = 0; j < ncols; ++j) r -= coef[j] * cols[j * n + d];
  return r;
}

VSLOC_AVX2 double affine_residual_sq_avx2(const double* y, const double* offset,
                                          const double* cols,
                                          const double* coef, std::size_t ncols,
                                          const double* w, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t d = 0;
  for (; d + 4 <= n; d += 4) {
    const __m256d r = residual4(y, offset, cols, coef, ncols, n, d);
    const __m256d rr = _mm256_mul_pd(r, r);
    acc = w ? _mm256_fmadd_pd(_mm256_loadu_pd(w + d), rr, acc)
            : _mm256_add_pd(acc, rr);
  }
  double s = hsum(acc);
  for (; d < n; ++d) {
    const double r = residual1(y, offset, cols, coef, ncols, n, d);
    s += (w ? w[d] : 1.0) * r * r;
  }
  return s;
}

VSLOC_AVX2 void affine_residual_sq_acc_avx2(const double* y,
                                            const double* offset,
                                            const double* cols,
                                            const double* coef,
                                            std::size_t ncols, double weight,
                                            double* acc, std::size_t n) {
  const __m256d vw = _mm256_set1_pd(weight);
  std::size_t d = 0;
  for (; d + 4 <= n; d += 4) {
    const __m256d r = residual4(y, offset, cols, coef, ncols, n, d);
    _mm256_storeu_pd(acc + d, _mm256_fmadd_pd(_mm256_mul_pd(vw, r), r,
                                              _mm256_loadu_pd(acc + d)));
  }
  for (; d < n; ++d) {
    const double r = residual1(y, offset, cols, coef, ncols, n, d);
    acc[d] += weight * r * r;
  }
}

VSLOC_AVX2 void convolve_acc_avx2(const double* x, std::size_t nx,
                                  const double* h, std::size_t nh,
                                  double* out) {
  for (std::size_t k = 0; k < nh; ++k) {
    if (h[k] == 0.0) continue;
    axpy_avx2(h[k], x, out + k, nx);
  }
}

}  // namespace

const KernelTable avx2_table{
    Isa::avx2,
    dot_avx2,
    axpy_avx2,
    affine_residual_sq_avx2,
    affine_residual_sq_acc_avx2,
    convolve_acc_avx2,
};

}  // namespace vsloc::kernels::detail

#endif
