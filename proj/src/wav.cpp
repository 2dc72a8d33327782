#include "vsloc/wav.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "vsloc/error.hpp"
#include "vsloc/util.hpp"

namespace vsloc::wav {
namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("WAV: truncated file");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  return v;
}

}  // namespace

void write_float32(const std::filesystem::path& path, const Audio& audio) {
  if (audio.channels.empty()) throw std::invalid_argument("WAV: no channels");
  const std::size_t frames = audio.channels.front().size();
  for (const auto& c : audio.channels)
    if (c.size() != frames) throw std::invalid_argument("WAV: channel length mismatch");
  const auto nch = static_cast<std::uint16_t>(audio.channels.size());
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * nch * 4);

  std::string out;
  out.reserve(44 + data_bytes);
  out.append("RIFF");
  put<std::uint32_t>(out, 36 + data_bytes);
  out.append("WAVE");
  out.append("fmt ");
  put<std::uint32_t>(out, 16);
  put<std::uint16_t>(out, kFormatFloat);
  put<std::uint16_t>(out, nch);
  put<std::uint32_t>(out, rate);
  put<std::uint32_t>(out, rate * nch * 4);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(nch * 4));
  put<std::uint16_t>(out, 32);
  out.append("data");
  put<std::uint32_t>(out, data_bytes);
  for (std::size_t i = 0; i < frames; ++i)
    for (const auto& c : audio.channels) put<float>(out, static_cast<float>(c[i]));
  write_file_atomic(path, out);
}

Audio read(const std::filesystem::path& path) {
  const std::string in = read_file(path);
  if (in.size() < 12 || in.compare(0, 4, "RIFF") != 0 || in.compare(8, 4, "WAVE") != 0)
    throw FormatError("WAV: not a RIFF/WAVE file: " + path.string());
  std::uint16_t format = 0, nch = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= in.size()) {
    const std::string id = in.substr(pos, 4);
    const auto size = get<std::uint32_t>(in, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      format = get<std::uint16_t>(in, body);
      nch = get<std::uint16_t>(in, body + 2);
      rate = get<std::uint32_t>(in, body + 4);
      bits = get<std::uint16_t>(in, body + 14);
      if (format == kFormatExtensible && size >= 26) format = get<std::uint16_t>(in, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("WAV: data chunk before fmt chunk");
      if (nch == 0) throw FormatError("WAV: zero channels");
      const std::size_t bytes_per = bits / 8;
      if (body + size > in.size()) throw FormatError("WAV: truncated data chunk");
      const std::size_t frames = size / (bytes_per * nch);
      Audio audio;
      audio.sample_rate = rate;
      audio.channels.assign(nch, std::vector<double>(frames));
      for (std::size_t i = 0; i < frames; ++i) {
        for (std::size_t c = 0; c < nch; ++c) {
          const std::size_t at = body + (i * nch + c) * bytes_per;
          double v = 0.0;
          if (format == kFormatFloat && bits == 32) {
            v = get<float>(in, at);
          } else if (format == kFormatFloat && bits == 64) {
            v = get<double>(in, at);
          } else if (format == kFormatPcm && bits == 16) {
            v = get<std::int16_t>(in, at) / 32768.0;
          } else if (format == kFormatPcm && bits == 24) {
            std::int32_t s = static_cast<unsigned char>(in[at]) |
                             (static_cast<unsigned char>(in[at + 1]) << 8) |
                             (static_cast<signed char>(in[at + 2]) * 65536);
            v = s / 8388608.0;
          } else if (format == kFormatPcm && bits == 32) {
            v = get<std::int32_t>(in, at) / 2147483648.0;
          } else {
            throw FormatError("WAV: unsupported sample format " + std::to_string(format) + "/" +
                              std::to_string(bits) + " bits");
          }
          audio.channels[c][i] = v;
        }
      }
      return audio;
    }
    pos = body + size + (size & 1u);
  }
  throw FormatError("WAV: no data chunk in " + path.string());
}

}  // namespace vsloc::wav
