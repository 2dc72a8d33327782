#pragma once

// Signal-processing building blocks: FFT (FFTW-backed), convolution,
// fractional-delay interpolation, the anchor band filter bank and rational
// resampling.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vsloc::dsp {

using cplx = std::complex<double>;

// One-sided real FFT of length n: returns n/2 + 1 bins.
std::vector<cplx> rfft(std::span<const double> x, std::size_t n);
// Inverse of rfft; returns n real samples, scaled so irfft(rfft(x)) == x.
std::vector<double> irfft(std::span<const cplx> spectrum, std::size_t n);

std::size_t next_pow2(std::size_t n);

// Full linear convolution (length a.size() + b.size() - 1). Uses the direct
// SIMD kernel for short filters and FFT overlap otherwise.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

// Periodic Hann window of length n.
std::vector<double> hann_periodic(std::size_t n);

double sinc(double x);

// Hann-windowed sinc interpolator centred at `position` (in samples). Adds
// `amplitude` * kernel into out; taps falling outside out are dropped.
void add_fractional_impulse(std::span<double> out, double position,
                            double amplitude, int taps);

// Weights of the same interpolator for output indices first .. first + taps,
// written to w[0 .. taps]; returns first.
long fractional_kernel(double position, int taps, std::span<double> w);

// Linear interpolation of values given at increasing anchor frequencies,
// clamped to the end values outside the anchor range.
double interpolate_anchors(std::span<const double> anchors,
                           std::span<const double> values, double freq);

// Zero-phase FIR bank whose members are the triangular interpolation basis
// over the anchors, so that sum_b g_b * band(b) realises the linearly
// interpolated response of the gains g. Odd length; the impulse response is
// centred at index taps/2.
class BandFilterBank {
 public:
  BandFilterBank(std::vector<double> anchors, double sample_rate, int taps);

  std::size_t bands() const { return anchors_.size(); }
  int taps() const { return taps_; }
  int centre() const { return taps_ / 2; }
  const std::vector<double>& anchors() const { return anchors_; }
  double sample_rate() const { return sample_rate_; }

  // Magnitude realising linear interpolation of amplitude gains.
  std::span<const double> amplitude_band(std::size_t b) const { return amp_[b]; }
  // Magnitude sqrt(hat_b): band-limited noise through these filters has a
  // power spectrum that linearly interpolates per-band energies.
  std::span<const double> energy_band(std::size_t b) const { return energy_[b]; }
  double energy_band_norm_sq(std::size_t b) const { return energy_norm_sq_[b]; }

  // sum_b gains[b] * amplitude_band(b)
  std::vector<double> fir_from_gains(std::span<const double> gains) const;

  // Triangular basis value of band b at frequency f.
  double basis(std::size_t b, double freq) const;

 private:
  std::vector<double> design(std::size_t b, bool energy) const;

  std::vector<double> anchors_;
  double sample_rate_;
  int taps_;
  std::vector<std::vector<double>> amp_;
  std::vector<std::vector<double>> energy_;
  std::vector<double> energy_norm_sq_;
};

// Process-wide cache; filter design is costly and banks are immutable.
const BandFilterBank& cached_band_filter_bank(const std::vector<double>& anchors,
                                              double sample_rate, int taps);

// Polyphase windowed-sinc resampler between integer sample rates.
std::vector<double> resample(std::span<const double> x, double rate_in,
                             double rate_out);

}  // namespace vsloc::dsp
