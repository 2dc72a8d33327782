#include "vsloc/rt60.hpp"

#include <cmath>
#include <vector>

#include "vsloc/error.hpp"
#include "vsloc/render.hpp"

namespace vsloc {

double estimate_rt60(std::span<const double> rir, double sample_rate) {
  if (!(sample_rate > 0.0)) throw InvalidScene("sample rate must be positive");
  const std::size_t n = rir.size();
  std::vector<double> edc(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) edc[i] = edc[i + 1] + rir[i] * rir[i];
  const double total = edc[0];
  if (!(total > 0.0)) throw EstimationUnreliable("RT60: impulse response has no energy");

  std::size_t start = n, stop = n;
  for (std::size_t i = 0; i < n; ++i) {
    const double db = 10.0 * std::log10(edc[i] / total);
    if (start == n && db <= -5.0) start = i;
    if (db <= -25.0) {
      stop = i;
      break;
    }
  }
  if (stop == n) throw EstimationUnreliable("RT60: decay does not reach -25 dB");
  const auto min_points = static_cast<std::size_t>(std::max(8.0, 1e-3 * sample_rate));
  if (stop - start < min_points)
    throw EstimationUnreliable("RT60: too few samples between -5 and -25 dB");

  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  const auto count = static_cast<double>(stop - start + 1);
  for (std::size_t i = start; i <= stop; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double y = 10.0 * std::log10(edc[i] / total);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double slope = (count * sty - st * sy) / (count * stt - st * st);
  if (!(slope < 0.0)) throw EstimationUnreliable("RT60: energy decay is not decreasing");
  return -60.0 / slope;
}

double estimate_rt60(const BinauralRir& rir) {
  return 0.5 * (estimate_rt60(rir.left, rir.sample_rate) +
                estimate_rt60(rir.right, rir.sample_rate));
}

double schroeder_frequency(double rt60, double volume) {
  if (!(rt60 > 0.0) || !(volume > 0.0))
    throw InvalidScene("Schroeder frequency needs positive RT60 and volume");
  return 2000.0 * std::sqrt(rt60 / volume);
}

}  // namespace vsloc
