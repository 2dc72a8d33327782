#pragma once

#include <filesystem>
#include <vector>

namespace vsloc::wav {

struct Audio {
  double sample_rate = 0.0;
  std::vector<std::vector<double>> channels;
};

// RIFF/WAVE, IEEE float 32-bit, little-endian, interleaved. All channels
// must have equal length.
void write_float32(const std::filesystem::path& path, const Audio& audio);

// Reads IEEE float 32/64-bit and PCM 16/24/32-bit files. Throws FormatError.
Audio read(const std::filesystem::path& path);

}  // namespace vsloc::wav
