#pragma once

#include <filesystem>
#include <string>

#include "vsloc/features.hpp"
#include "vsloc/gllim.hpp"

namespace vsloc {

// Layout metadata stored next to a feature matrix.
struct FeatureLayout {
  std::size_t f_prime = 0;
  double sample_rate = 0.0;
  double cutoff = 0.0;
  std::size_t window_length = 0;
  std::size_t first_bin = 0;

  std::size_t dimension() const { return 3 * f_prime; }
  static FeatureLayout of(const FeatureVector& fv);
  static FeatureLayout of(const FeatureConfig& cfg);
};

// Binary container: 8-byte magic "VSFEAT\0\0", uint32 version (1), uint64 N,
// uint64 D, then N * D little-endian float32 values, row-major.
void write_feature_binary(const std::filesystem::path& path, const RowMatrix& features);
RowMatrix read_feature_binary(const std::filesystem::path& path);

// One row per scene, D comma-separated values printed with enough digits to
// round-trip float32.
void write_feature_csv(const std::filesystem::path& path, const RowMatrix& features);
RowMatrix read_feature_csv(const std::filesystem::path& path);

void write_feature_sidecar(const std::filesystem::path& path, const FeatureLayout& layout,
                           std::size_t rows);
FeatureLayout read_feature_sidecar(const std::filesystem::path& path);

// Rounds every entry to the nearest float32 so that in-memory matrices equal
// what the binary container stores.
void round_to_float32(RowMatrix& m);

}  // namespace vsloc
