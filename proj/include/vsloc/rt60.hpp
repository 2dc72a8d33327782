#pragma once

#include <span>

namespace vsloc {

struct BinauralRir;

// Reverberation time from Schroeder backward integration: a least-squares line
// through the energy decay curve between -5 and -25 dB, extrapolated to -60 dB.
// Throws EstimationUnreliable when the decay never reaches -25 dB or the fit
// range holds too few samples.
double estimate_rt60(std::span<const double> rir, double sample_rate);

// Mean of the per-ear estimates.
double estimate_rt60(const BinauralRir& rir);

// 2000 * sqrt(RT60 / V): the frequency above which room modes overlap.
double schroeder_frequency(double rt60, double volume);

}  // namespace vsloc
