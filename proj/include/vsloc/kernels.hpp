#pragma once

// Data-parallel inner loops shared by the renderer and the GLLiM EM.
//
// Every kernel has a scalar reference implementation and, where the target
// supports it, an AVX2+FMA (x86-64) or NEON (aarch64) variant. The variant is
// picked once at startup from the CPU feature bits; VSLOC_ISA=scalar|avx2|neon
// in the environment overrides the choice. Variants agree with the scalar
// reference to rounding (see tests/test_kernels.cpp); they are not bit-equal
// to it, but each variant is deterministic on its own.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace vsloc::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // sum_d w[d] * (y[d] - offset[d] - sum_j coef[j] * cols[j*n + d])^2
  // w == nullptr means unit weights.
  double (*affine_residual_sq)(const double* y, const double* offset,
                               const double* cols, const double* coef,
                               std::size_t ncols, const double* w,
                               std::size_t n);

  // acc[d] += weight * (y[d] - offset[d] - sum_j coef[j] * cols[j*n + d])^2
  void (*affine_residual_sq_acc)(const double* y, const double* offset,
                                 const double* cols, const double* coef,
                                 std::size_t ncols, double weight, double* acc,
                                 std::size_t n);

  // Full linear convolution, accumulated: out[i + k] += h[k] * x[i].
  // out must hold nx + nh - 1 values.
  void (*convolve_acc)(const double* x, std::size_t nx, const double* h,
                       std::size_t nh, double* out);
};

const KernelTable& table(Isa isa);
const KernelTable& active();
std::vector<Isa> available_isas();

// Used by the equivalence tests; not thread-safe against concurrent kernel use.
void force_isa(Isa isa);

// Span-level wrappers over active().
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void convolve_acc(std::span<const double> x, std::span<const double> h,
                  std::span<double> out);

namespace detail {
extern const KernelTable scalar_table;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelTable avx2_table;
#endif
#if defined(__aarch64__)
extern const KernelTable neon_table;
#endif
}  // namespace detail

}  // namespace vsloc::kernels
