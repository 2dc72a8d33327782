#include "vsloc/feature_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <sstream>

#include <json.hpp>

#include "vsloc/error.hpp"
#include "vsloc/util.hpp"

namespace vsloc {
namespace {

constexpr char kMagic[8] = {'V', 'S', 'F', 'E', 'A', 'T', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;
static_assert(std::endian::native == std::endian::little, "little-endian host required");

}  // namespace

FeatureLayout FeatureLayout::of(const FeatureVector& fv) {
  return {fv.f_prime, fv.sample_rate, fv.cutoff, fv.window_length, fv.first_bin};
}

FeatureLayout FeatureLayout::of(const FeatureConfig& cfg) {
  const std::size_t win = cfg.window_length();
  const std::size_t bins = win / 2 + 1;
  return {cfg.retained_bins(), cfg.sample_rate, cfg.cutoff, win, bins - cfg.retained_bins()};
}

void round_to_float32(RowMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
}

void write_feature_binary(const std::filesystem::path& path, const RowMatrix& features) {
  std::string out(kMagic, 8);
  const std::uint32_t version = kVersion;
  const std::uint64_t n = static_cast<std::uint64_t>(features.rows());
  const std::uint64_t d = static_cast<std::uint64_t>(features.cols());
  out.append(reinterpret_cast<const char*>(&version), 4);
  out.append(reinterpret_cast<const char*>(&n), 8);
  out.append(reinterpret_cast<const char*>(&d), 8);
  out.reserve(out.size() + n * d * 4);
  for (Eigen::Index i = 0; i < features.size(); ++i) {
    const float f = static_cast<float>(features.data()[i]);
    out.append(reinterpret_cast<const char*>(&f), 4);
  }
  write_file_atomic(path, out);
}

RowMatrix read_feature_binary(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 28 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw FormatError(path.string() + ": not a feature container (bad magic)");
  std::uint32_t version;
  std::uint64_t n, d;
  std::memcpy(&version, bytes.data() + 8, 4);
  std::memcpy(&n, bytes.data() + 12, 8);
  std::memcpy(&d, bytes.data() + 20, 8);
  if (version != kVersion)
    throw FormatError(path.string() + ": unsupported feature container version " +
                      std::to_string(version));
  if (bytes.size() != 28 + n * d * 4)
    throw FormatError(path.string() + ": size does not match N x D header");
  RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n * d; ++i) {
    float f;
    std::memcpy(&f, bytes.data() + 28 + 4 * i, 4);
    m.data()[i] = f;
  }
  return m;
}

void write_feature_csv(const std::filesystem::path& path, const RowMatrix& features) {
  std::string out;
  char buf[32];
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      if (c) out += ',';
      const auto res = std::to_chars(buf, buf + sizeof buf, static_cast<float>(features(r, c)));
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

RowMatrix read_feature_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<double> values;
  std::size_t rows = 0, cols = 0, line_cols = 0;
  const char* p = text.data();
  const char* end = p + text.size();
  while (p < end) {
    float v;
    const auto res = std::from_chars(p, end, v);
    if (res.ec != std::errc())
      throw FormatError(path.string() + ": bad number on row " + std::to_string(rows + 1));
    values.push_back(v);
    ++line_cols;
    p = res.ptr;
    if (p < end && *p == ',') {
      ++p;
    } else if (p == end || *p == '\n') {
      if (rows == 0) cols = line_cols;
      if (line_cols != cols)
        throw FormatError(path.string() + ": row " + std::to_string(rows + 1) + " has " +
                          std::to_string(line_cols) + " values, expected " + std::to_string(cols));
      ++rows;
      line_cols = 0;
      if (p < end) ++p;
    } else {
      throw FormatError(path.string() + ": unexpected character on row " + std::to_string(rows + 1));
    }
  }
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

void write_feature_sidecar(const std::filesystem::path& path, const FeatureLayout& layout,
                           std::size_t rows) {
  nlohmann::json j;
  j["layout"] = {"ild", "ipd_real", "ipd_imag"};
  j["rows"] = rows;
  j["dimension"] = layout.dimension();
  j["f_prime"] = layout.f_prime;
  j["sample_rate"] = layout.sample_rate;
  j["cutoff_hz"] = layout.cutoff;
  j["window_length"] = layout.window_length;
  j["first_bin"] = layout.first_bin;
  write_file_atomic(path, j.dump(2) + "\n");
}

FeatureLayout read_feature_sidecar(const std::filesystem::path& path) {
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    FeatureLayout l;
    l.f_prime = j.at("f_prime").get<std::size_t>();
    l.sample_rate = j.at("sample_rate").get<double>();
    l.cutoff = j.at("cutoff_hz").get<double>();
    l.window_length = j.at("window_length").get<std::size_t>();
    l.first_bin = j.at("first_bin").get<std::size_t>();
    return l;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace vsloc
