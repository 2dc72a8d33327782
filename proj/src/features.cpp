#include "vsloc/features.hpp"

#include <cmath>
#include <stdexcept>

#include "vsloc/dsp.hpp"
#include "vsloc/error.hpp"
#include "vsloc/render.hpp"
#include "vsloc/util.hpp"

namespace vsloc {
namespace {

void require_same_shape(const Spectrogram& a, const Spectrogram& b) {
  if (a.bins() != b.bins() || a.frames() != b.frames())
    throw DimensionMismatch("left and right spectrograms differ in shape");
}

std::size_t first_bin_at(double cutoff, double sample_rate, std::size_t window_length) {
  // Smallest f with f * fs / N >= cutoff, evaluated exactly in integers when
  // the inputs are whole numbers.
  const double exact = cutoff * static_cast<double>(window_length) / sample_rate;
  auto f = static_cast<std::size_t>(std::max(0.0, std::ceil(exact - 1e-9)));
  return f;
}

}  // namespace

Spectrogram stft(std::span<const double> signal, double sample_rate, double window_ms,
                 double overlap) {
  if (!(sample_rate > 0.0)) throw std::invalid_argument("stft: sample rate must be positive");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw std::invalid_argument("stft: overlap in [0, 1)");
  const auto win = static_cast<std::size_t>(std::lround(window_ms * 1e-3 * sample_rate));
  const auto hop = static_cast<std::size_t>(std::lround(static_cast<double>(win) * (1.0 - overlap)));
  if (win < 2 || hop == 0) throw std::invalid_argument("stft: window too short");
  if (signal.size() < win)
    throw std::invalid_argument("stft: signal of " + std::to_string(signal.size()) +
                                " samples is shorter than one window (" + std::to_string(win) + ")");
  const std::size_t frames = (signal.size() - win) / hop + 1;
  const std::size_t bins = win / 2 + 1;
  Spectrogram s;
  s.sample_rate = sample_rate;
  s.window_length = win;
  s.hop = hop;
  s.values = Grid<cplx>(bins, frames);
  const auto w = dsp::hann_periodic(win);
  std::vector<double> frame(win);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < win; ++i) frame[i] = signal[t * hop + i] * w[i];
    const auto spec = dsp::rfft(frame, win);
    for (std::size_t f = 0; f < bins; ++f) s.values(f, t) = spec[f];
  }
  return s;
}

Grid<double> ild(const Spectrogram& left, const Spectrogram& right, double epsilon) {
  require_same_shape(left, right);
  Grid<double> out(left.bins(), left.frames());
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double l = std::max(std::abs(left.values.data[i]), epsilon);
    const double r = std::max(std::abs(right.values.data[i]), epsilon);
    out.data[i] = 20.0 * std::log10(l / r);
  }
  return out;
}

Grid<cplx> ipd(const Spectrogram& left, const Spectrogram& right) {
  require_same_shape(left, right);
  Grid<cplx> out(left.bins(), left.frames());
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const cplx l = left.values.data[i];
    const cplx r = right.values.data[i];
    const double m = std::abs(l) * std::abs(r);
    out.data[i] = m > 0.0 ? l * std::conj(r) / m : cplx{1.0, 0.0};
  }
  return out;
}

FeatureVector assemble_feature(const Grid<double>& ild_matrix, const Grid<cplx>& ipd_matrix,
                               double sample_rate, std::size_t window_length, double cutoff) {
  if (ild_matrix.rows != ipd_matrix.rows || ild_matrix.cols != ipd_matrix.cols)
    throw DimensionMismatch("ILD and IPD matrices differ in shape");
  if (ild_matrix.cols == 0) throw DimensionMismatch("no frames to average");
  const std::size_t first = first_bin_at(cutoff, sample_rate, window_length);
  if (first >= ild_matrix.rows)
    throw DimensionMismatch("cutoff " + std::to_string(cutoff) + " Hz removes every bin");
  FeatureVector fv;
  fv.sample_rate = sample_rate;
  fv.cutoff = cutoff;
  fv.window_length = window_length;
  fv.first_bin = first;
  fv.f_prime = ild_matrix.rows - first;
  fv.values.assign(3 * fv.f_prime, 0.0);
  const double frames = static_cast<double>(ild_matrix.cols);
  for (std::size_t k = 0; k < fv.f_prime; ++k) {
    const std::size_t f = first + k;
    double level = 0.0;
    cplx phase{0.0, 0.0};
    for (std::size_t t = 0; t < ild_matrix.cols; ++t) {
      level += ild_matrix(f, t);
      phase += ipd_matrix(f, t);
    }
    const double mag = std::abs(phase);
    const cplx unit = mag > 0.0 ? phase / mag : cplx{1.0, 0.0};
    fv.values[k] = level / frames;
    fv.values[fv.f_prime + k] = unit.real();
    fv.values[2 * fv.f_prime + k] = unit.imag();
  }
  return fv;
}

std::size_t FeatureConfig::window_length() const {
  return static_cast<std::size_t>(std::lround(window_ms * 1e-3 * sample_rate));
}

std::size_t FeatureConfig::retained_bins() const {
  const std::size_t bins = window_length() / 2 + 1;
  const std::size_t first = first_bin_at(cutoff, sample_rate, window_length());
  return first >= bins ? 0 : bins - first;
}

void FeatureConfig::validate() const {
  if (!(sample_rate > 0.0)) throw ConfigError("features.sample_rate must be positive");
  if (!(window_ms > 0.0)) throw ConfigError("features.window_ms must be positive");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("features.overlap must be in [0, 1)");
  if (!(cutoff >= 0.0)) throw ConfigError("features.cutoff must be >= 0");
  if (!(epsilon > 0.0)) throw ConfigError("features.epsilon must be positive");
  if (retained_bins() == 0) throw ConfigError("features.cutoff removes every bin");
  if (noise_duration * sample_rate < static_cast<double>(window_length()))
    throw ConfigError("features.noise_duration is shorter than one analysis window");
}

FeatureVector scene_to_feature(const BinauralRir& rir, const FeatureConfig& config,
                               std::uint64_t seed) {
  config.validate();
  if (rir.left.empty() || rir.left.size() != rir.right.size() || !(rir.sample_rate > 0.0))
    throw InvalidScene("scene_to_feature: malformed impulse response");
  const auto n = static_cast<std::size_t>(std::lround(config.noise_duration * rir.sample_rate));
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(n);
  for (double& v : noise) v = normal(rng);
  auto record = [&](const std::vector<double>& h) {
    auto y = dsp::convolve(noise, h);
    y.resize(n);
    return dsp::resample(y, rir.sample_rate, config.sample_rate);
  };
  const auto left = stft(record(rir.left), config.sample_rate, config.window_ms, config.overlap);
  const auto right = stft(record(rir.right), config.sample_rate, config.window_ms, config.overlap);
  return assemble_feature(ild(left, right, config.epsilon), ipd(left, right), config.sample_rate,
                          left.window_length, config.cutoff);
}

}  // namespace vsloc
