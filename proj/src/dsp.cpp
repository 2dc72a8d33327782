#include "vsloc/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "vsloc/kernels.hpp"

namespace vsloc::dsp {
namespace {

constexpr double kPi = std::numbers::pi;

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T, FftwFree>;

template <class T>
FftwBuffer<T> fftw_alloc(std::size_t count) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(count, 1)));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

// FFTW's planner is not re-entrant; execution of an existing plan on new
// (equally aligned) arrays is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan forward(std::size_t n) { return get(n, true); }
  fftw_plan inverse(std::size_t n) { return get(n, false); }

 private:
  fftw_plan get(std::size_t n, bool fwd) {
    std::lock_guard lock(mu_);
    auto& slot = (fwd ? fwd_ : inv_)[n];
    if (slot) return slot;
    auto real = fftw_alloc<double>(n);
    auto spec = fftw_alloc<fftw_complex>(n / 2 + 1);
    const int ni = static_cast<int>(n);
    slot = fwd ? fftw_plan_dft_r2c_1d(ni, real.get(), spec.get(), FFTW_ESTIMATE)
               : fftw_plan_dft_c2r_1d(ni, spec.get(), real.get(), FFTW_ESTIMATE);
    if (!slot) throw std::runtime_error("FFTW planning failed");
    return slot;
  }

  std::mutex mu_;
  std::map<std::size_t, fftw_plan> fwd_;
  std::map<std::size_t, fftw_plan> inv_;
};

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<cplx> rfft(std::span<const double> x, std::size_t n) {
  if (n == 0) throw std::invalid_argument("rfft: zero length");
  auto in = fftw_alloc<double>(n);
  auto out = fftw_alloc<fftw_complex>(n / 2 + 1);
  const std::size_t m = std::min(n, x.size());
  std::copy_n(x.begin(), m, in.get());
  std::fill(in.get() + m, in.get() + n, 0.0);
  fftw_execute_dft_r2c(PlanCache::instance().forward(n), in.get(), out.get());
  std::vector<cplx> spec(n / 2 + 1);
  for (std::size_t k = 0; k < spec.size(); ++k)
    spec[k] = {out.get()[k][0], out.get()[k][1]};
  return spec;
}

std::vector<double> irfft(std::span<const cplx> spectrum, std::size_t n) {
  if (spectrum.size() != n / 2 + 1)
    throw std::invalid_argument("irfft: spectrum size must be n/2 + 1");
  auto in = fftw_alloc<fftw_complex>(n / 2 + 1);
  auto out = fftw_alloc<double>(n);
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    in.get()[k][0] = spectrum[k].real();
    in.get()[k][1] = spectrum[k].imag();
  }
  fftw_execute_dft_c2r(PlanCache::instance().inverse(n), in.get(), out.get());
  std::vector<double> x(out.get(), out.get() + n);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : x) v *= scale;
  return x;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t len = a.size() + b.size() - 1;
  if (std::min(a.size(), b.size()) <= 128) {
    std::vector<double> out(len, 0.0);
    if (a.size() >= b.size())
      kernels::convolve_acc(a, b, out);
    else
      kernels::convolve_acc(b, a, out);
    return out;
  }
  const std::size_t n = next_pow2(len);
  auto fa = rfft(a, n);
  const auto fb = rfft(b, n);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  auto out = irfft(fa, n);
  out.resize(len);
  return out;
}

std::vector<double> hann_periodic(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = kPi * x;
  return std::sin(px) / px;
}

long fractional_kernel(double position, int taps, std::span<double> w) {
  if (w.size() < static_cast<std::size_t>(taps) + 1)
    throw std::invalid_argument("fractional_kernel: buffer too small");
  const double half = 0.5 * taps;
  const auto first = static_cast<long>(std::ceil(position - half));
  // sin(pi x) alternates in sign between consecutive taps and the Hann term
  // rotates by a fixed angle, so each needs one evaluation per kernel.
  const double x0 = static_cast<double>(first) - position;
  const double s0 = std::sin(kPi * x0);
  const double step = 2.0 * kPi / taps;
  double cr = std::cos(step * x0), ci = std::sin(step * x0);
  const double rr = std::cos(step), ri = std::sin(step);
  double sign = 1.0;
  for (int k = 0; k <= taps; ++k) {
    const double x = x0 + k;
    double v = 0.0;
    if (std::abs(x) < half) {
      const double sinc_x = x == 0.0 ? 1.0 : sign * s0 / (kPi * x);
      v = 0.5 * (1.0 + cr) * sinc_x;
    }
    w[static_cast<std::size_t>(k)] = v;
    const double nr = cr * rr - ci * ri;
    ci = cr * ri + ci * rr;
    cr = nr;
    sign = -sign;
  }
  return first;
}

void add_fractional_impulse(std::span<double> out, double position,
                            double amplitude, int taps) {
  double stack[64];
  std::vector<double> heap;
  std::span<double> w(stack, 64);
  if (taps + 1 > 64) {
    heap.resize(static_cast<std::size_t>(taps) + 1);
    w = heap;
  }
  const long first = fractional_kernel(position, taps, w);
  const auto size = static_cast<long>(out.size());
  for (int k = 0; k <= taps; ++k) {
    const long m = first + k;
    if (m < 0 || m >= size) continue;
    out[static_cast<std::size_t>(m)] += amplitude * w[static_cast<std::size_t>(k)];
  }
}

double interpolate_anchors(std::span<const double> anchors,
                           std::span<const double> values, double freq) {
  if (anchors.empty() || anchors.size() != values.size())
    throw std::invalid_argument("interpolate_anchors: size mismatch");
  if (freq <= anchors.front()) return values.front();
  if (freq >= anchors.back()) return values.back();
  const auto it = std::upper_bound(anchors.begin(), anchors.end(), freq);
  const std::size_t hi = static_cast<std::size_t>(it - anchors.begin());
  const std::size_t lo = hi - 1;
  const double t = (freq - anchors[lo]) / (anchors[hi] - anchors[lo]);
  return values[lo] + t * (values[hi] - values[lo]);
}

BandFilterBank::BandFilterBank(std::vector<double> anchors, double sample_rate,
                               int taps)
    : anchors_(std::move(anchors)), sample_rate_(sample_rate), taps_(taps) {
  if (anchors_.empty()) throw std::invalid_argument("BandFilterBank: no anchors");
  if (!std::is_sorted(anchors_.begin(), anchors_.end()) ||
      std::adjacent_find(anchors_.begin(), anchors_.end()) != anchors_.end())
    throw std::invalid_argument("BandFilterBank: anchors must strictly increase");
  if (taps_ < 1 || taps_ % 2 == 0)
    throw std::invalid_argument("BandFilterBank: taps must be odd and positive");
  if (!(sample_rate_ > 0.0)) throw std::invalid_argument("BandFilterBank: bad rate");
  for (std::size_t b = 0; b < anchors_.size(); ++b) {
    amp_.push_back(design(b, false));
    energy_.push_back(design(b, true));
    double e = 0.0;
    for (double v : energy_.back()) e += v * v;
    energy_norm_sq_.push_back(e);
  }
}

double BandFilterBank::basis(std::size_t b, double f) const {
  const std::size_t n = anchors_.size();
  if (n == 1) return 1.0;
  const double a = anchors_[b];
  if (f <= a) {
    if (b == 0) return 1.0;
    const double lo = anchors_[b - 1];
    return f <= lo ? 0.0 : (f - lo) / (a - lo);
  }
  if (b == n - 1) return 1.0;
  const double hi = anchors_[b + 1];
  return f >= hi ? 0.0 : (hi - f) / (hi - a);
}

std::vector<double> BandFilterBank::design(std::size_t b, bool energy) const {
  // Frequency sampling on a dense grid, then a Hann taper that is exactly 1
  // at the centre tap so that the amplitude bands sum to a unit impulse.
  const std::size_t grid = 8192;
  std::vector<double> mag(grid / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) {
    const double f = static_cast<double>(k) * sample_rate_ / static_cast<double>(grid);
    const double v = basis(b, f);
    mag[k] = energy ? std::sqrt(v) : v;
  }
  const int c = centre();
  std::vector<double> h(static_cast<std::size_t>(taps_));
  for (int n = -c; n <= c; ++n) {
    double acc = mag[0];
    for (std::size_t k = 1; k < grid / 2; ++k)
      acc += 2.0 * mag[k] *
             std::cos(2.0 * kPi * static_cast<double>(k) * n / static_cast<double>(grid));
    acc += mag[grid / 2] * std::cos(kPi * n);
    acc /= static_cast<double>(grid);
    const double w = 0.5 * (1.0 + std::cos(2.0 * kPi * n / (taps_ + 1)));
    h[static_cast<std::size_t>(n + c)] = acc * w;
  }
  return h;
}

std::vector<double> BandFilterBank::fir_from_gains(std::span<const double> gains) const {
  if (gains.size() != anchors_.size())
    throw std::invalid_argument("fir_from_gains: gain count mismatch");
  std::vector<double> h(static_cast<std::size_t>(taps_), 0.0);
  for (std::size_t b = 0; b < gains.size(); ++b)
    kernels::axpy(gains[b], amp_[b], h);
  return h;
}

const BandFilterBank& cached_band_filter_bank(const std::vector<double>& anchors,
                                              double sample_rate, int taps) {
  static std::mutex mu;
  static std::map<std::tuple<std::vector<double>, double, int>,
                  std::unique_ptr<BandFilterBank>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{anchors, sample_rate, taps}];
  if (!slot) slot = std::make_unique<BandFilterBank>(anchors, sample_rate, taps);
  return *slot;
}

std::vector<double> resample(std::span<const double> x, double rate_in,
                             double rate_out) {
  if (!(rate_in > 0.0) || !(rate_out > 0.0))
    throw std::invalid_argument("resample: rates must be positive");
  if (rate_in == rate_out) return {x.begin(), x.end()};
  const auto in = static_cast<long long>(std::llround(rate_in));
  const auto out = static_cast<long long>(std::llround(rate_out));
  if (static_cast<double>(in) != rate_in || static_cast<double>(out) != rate_out)
    throw std::invalid_argument("resample: integer sample rates required");
  const long long g = std::gcd(in, out);
  const long long up = out / g;
  const long long down = in / g;
  const long long zero_crossings = 16;
  const long long half = zero_crossings * std::max(up, down);
  const double fc = 0.5 / static_cast<double>(std::max(up, down));
  const double beta = 8.0;
  const double i0b = std::cyl_bessel_i(0.0, beta);
  std::vector<double> h(static_cast<std::size_t>(2 * half + 1));
  for (long long k = -half; k <= half; ++k) {
    const double r = static_cast<double>(k) / static_cast<double>(half);
    const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
    h[static_cast<std::size_t>(k + half)] =
        static_cast<double>(up) * 2.0 * fc * sinc(2.0 * fc * static_cast<double>(k)) * win;
  }
  const auto n_in = static_cast<long long>(x.size());
  const long long n_out = (n_in * up + down - 1) / down;
  std::vector<double> y(static_cast<std::size_t>(n_out), 0.0);
  for (long long j = 0; j < n_out; ++j) {
    const long long t = j * down;  // position on the upsampled grid
    long long i_lo = (t - half + up - 1) / up;
    if (t - half < 0) i_lo = -((half - t) / up);
    const long long i_hi = (t + half) / up;
    double acc = 0.0;
    for (long long i = std::max(i_lo, 0LL); i <= i_hi && i < n_in; ++i)
      acc += x[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(t - i * up + half)];
    y[static_cast<std::size_t>(j)] = acc;
  }
  return y;
}

}  // namespace vsloc::dsp
