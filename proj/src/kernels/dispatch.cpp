#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "vsloc/kernels.hpp"

namespace vsloc::kernels {
namespace {

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("VSLOC_ISA")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == isa_name(isa) && cpu_has(isa)) return &table(isa);
    }
    return &detail::scalar_table;
  }
  if (cpu_has(Isa::avx2)) return &table(Isa::avx2);
  if (cpu_has(Isa::neon)) return &table(Isa::neon);
  return &detail::scalar_table;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> t{pick_default()};
  return t;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

const KernelTable& table(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return detail::scalar_table;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return detail::avx2_table;
#else
      break;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return detail::neon_table;
#else
      break;
#endif
  }
  throw std::invalid_argument("kernel ISA not compiled into this build: " +
                              std::string(isa_name(isa)));
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
    if (cpu_has(isa)) out.push_back(isa);
  return out;
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (!cpu_has(isa))
    throw std::invalid_argument("CPU does not support " +
                                std::string(isa_name(isa)));
  current().store(&table(isa));
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void convolve_acc(std::span<const double> x, std::span<const double> h,
                  std::span<double> out) {
  if (x.empty() || h.empty()) return;
  if (out.size() < x.size() + h.size() - 1)
    throw std::invalid_argument("convolve_acc: output too short");
  active().convolve_acc(x.data(), x.size(), h.data(), h.size(), out.data());
}

}  // namespace vsloc::kernels
