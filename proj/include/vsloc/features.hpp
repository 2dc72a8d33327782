#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace vsloc {

struct BinauralRir;

using cplx = std::complex<double>;

// Dense row-major matrix; rows are frequency bins, columns frames.
template <class T>
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}
  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct Spectrogram {
  Grid<cplx> values;  // F x T
  double sample_rate = 0.0;
  std::size_t window_length = 0;
  std::size_t hop = 0;

  std::size_t bins() const { return values.rows; }
  std::size_t frames() const { return values.cols; }
  double bin_frequency(std::size_t f) const {
    return static_cast<double>(f) * sample_rate / static_cast<double>(window_length);
  }
};

// Periodic-Hann one-sided STFT. Window and hop are rounded to whole samples.
// Throws std::invalid_argument if the signal is shorter than one window.
Spectrogram stft(std::span<const double> signal, double sample_rate, double window_ms = 64.0,
                 double overlap = 0.5);

// 20 log10(|L| / |R|) with both magnitudes floored at epsilon.
Grid<double> ild(const Spectrogram& left, const Spectrogram& right, double epsilon = 1e-12);

// (L / |L|) / (R / |R|); a bin where either magnitude is zero maps to 1.
Grid<cplx> ipd(const Spectrogram& left, const Spectrogram& right);

struct FeatureVector {
  std::vector<double> values;  // [ILD | Re IPD | Im IPD], each f_prime long
  double sample_rate = 0.0;
  double cutoff = 0.0;
  std::size_t window_length = 0;
  std::size_t first_bin = 0;  // first retained STFT bin
  std::size_t f_prime = 0;

  std::size_t dimension() const { return values.size(); }
  std::span<const double> ild() const { return {values.data(), f_prime}; }
  std::span<const double> ipd_real() const { return {values.data() + f_prime, f_prime}; }
  std::span<const double> ipd_imag() const { return {values.data() + 2 * f_prime, f_prime}; }
};

// Keeps bins whose centre frequency is >= cutoff, averages over frames (the
// IPD as a renormalised complex mean) and concatenates the three blocks.
FeatureVector assemble_feature(const Grid<double>& ild_matrix, const Grid<cplx>& ipd_matrix,
                               double sample_rate, std::size_t window_length, double cutoff);

struct FeatureConfig {
  double sample_rate = 16000.0;
  double window_ms = 64.0;
  double overlap = 0.5;
  double cutoff = 500.0;
  double noise_duration = 1.0;  // seconds of emitted white noise
  double epsilon = 1e-12;

  std::size_t window_length() const;
  std::size_t retained_bins() const;
  std::size_t dimension() const { return 3 * retained_bins(); }
  void validate() const;
};

// Binaural recording of white Gaussian noise through `rir` (truncated to the
// noise length), resampled to the feature rate, then reduced to a feature
// vector. Deterministic in `seed`.
FeatureVector scene_to_feature(const BinauralRir& rir, const FeatureConfig& config,
                               std::uint64_t seed);

}  // namespace vsloc
