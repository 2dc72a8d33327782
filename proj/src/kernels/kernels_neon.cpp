#include "vsloc/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace vsloc::kernels::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

inline float64x2_t residual2(const double* y, const double* offset,
                             const double* cols, const double* coef,
                             std::size_t ncols, std::size_t n, std::size_t d) {
  float64x2_t r = vsubq_f64(vld1q_f64(y + d), vld1q_f64(offset + d));
  for (std::size_t j = 0; j < ncols; ++j)
    r = vfmsq_f64(r, vdupq_n_f64(coef[j]), vld1q_f64(cols + j * n + d));
  return r;
}

inline double residual1(const double* y, const double* offset,
                        const double* cols, const double* coef,
                        std::size_t ncols, std::size_t n, std::size_t d) {
  double r = y[d] - offset[d];
  for (std::size_t j = 0; j < ncols; ++j) r -= coef[j] * cols[j * n + d];
  return r;
}

double affine_residual_sq_neon(const double* y, const double* offset,
                               const double* cols, const double* coef,
                               std::size_t ncols, const double* w,
                               std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t d = 0;
  for (; d + 2 <= n; d += 2) {
    const float64x2_t r = residual2(y, offset, cols, coef, ncols, n, d);
    const float64x2_t rr = vmulq_f64(r, r);
    acc = w ? vfmaq_f64(acc, vld1q_f64(w + d), rr) : vaddq_f64(acc, rr);
  }
  double s = vaddvq_f64(acc);
  for (; d < n; ++d) {
    const double r = residual1(y, offset, cols, coef, ncols, n, d);
    s += (w ? w[d] : 1.0) * r * r;
  }
  return s;
}

void affine_residual_sq_acc_neon(const double* y, const double* offset,
                                 const double* cols, const double* coef,
                                 std::size_t ncols, double weight, double* acc,
                                 std::size_t n) {
  const float64x2_t vw = vdupq_n_f64(weight);
  std::size_t d = 0;
  for (; d + 2 <= n; d += 2) {
    const float64x2_t r = residual2(y, offset, cols, coef, ncols, n, d);
    vst1q_f64(acc + d, vfmaq_f64(vld1q_f64(acc + d), vmulq_f64(vw, r), r));
  }
  for (; d < n; ++d) {
    const double r = residual1(y, offset, cols, coef, ncols, n, d);
    acc[d] += weight * r * r;
  }
}

void convolve_acc_neon(const double* x, std::size_t nx, const double* h,
                       std::size_t nh, double* out) {
  for (std::size_t k = 0; k < nh; ++k) {
    if (h[k] == 0.0) continue;
    axpy_neon(h[k], x, out + k, nx);
  }
}

}  // namespace

const KernelTable neon_table{
    Isa::neon,
    dot_neon,
    axpy_neon,
    affine_residual_sq_neon,
    affine_residual_sq_acc_neon,
    convolve_acc_neon,
};

}  // namespace vsloc::kernels::detail

#endif
