#include "vsloc/kernels.hpp"

namespace vsloc::kernels::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

inline double residual_at(const double* y, const double* offset,
                          const double* cols, const double* coef,
                          std::size_t ncols, std::size_t n, std::size_t d) {
  double r = y[d] - offset[d];
  for (std::size_t j = 0; j < ncols; ++j) r -= coef[j] * cols[j * n + d];
  return r;
}

double affine_residual_sq_scalar(const double* y, const double* offset,
                                 const double* cols, const double* coef,
                                 std::size_t ncols, const double* w,
                                 std::size_t n) {
  double s = 0.0;
  for (std::size_t d = 0; d < n; ++d) {
    const double r = residual_at(y, offset, cols, coef, ncols, n, d);
    s += (w ? w[d] : 1.0) * r * r;
  }
  return s;
}

void affine_residual_sq_acc_scalar(const double* y, const double* offset,
                                   const double* cols, const double* coef,
                                   std::size_t ncols, double weight,
                                   double* acc, std::size_t n) {
  for (std::size_t d = 0; d < n; ++d) {
    const double r = residual_at(y, offset, cols, coef, ncols, n, d);
    acc[d] += weight * r * r;
  }
}

void convolve_acc_scalar(const double* x, std::size_t nx, const double* h,
                         std::size_t nh, double* out) {
  for (std::size_t k = 0; k < nh; ++k) {
    const double hk = h[k];
    if (hk == 0.0) continue;
    double* o = out + k;
    for (std::size_t i = 0; i < nx; ++i) o[i] += hk * x[i];
  }
}

}  // namespace

const KernelTable scalar_table{
    Isa::scalar,
    dot_scalar,
    axpy_scalar,
    affine_residual_sq_scalar,
    affine_residual_sq_acc_scalar,
    convolve_acc_scalar,
};

}  // namespace vsloc::kernels::detail
