#include <bit>
#include <cstring>

#include <json.hpp>

#include "vsloc/error.hpp"
#include "vsloc/gllim.hpp"
#include "vsloc/util.hpp"

namespace vsloc {
namespace {

constexpr char kMagic[8] = {'V', 'S', 'G', 'L', 'L', 'I', 'M', '1'};
static_assert(std::endian::native == std::endian::little, "little-endian host required");

void put_u64(std::string& out, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

void put_doubles(std::string& out, const double* p, std::size_t n) {
  out.append(reinterpret_cast<const char*>(p), n * sizeof(double));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  void take(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("GLLiM model file is truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  void doubles(double* dst, std::size_t n) { take(dst, n * sizeof(double)); }
  std::string_view view(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("GLLiM model file is truncated");
    auto v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

nlohmann::json to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from(const nlohmann::json& j, std::size_t expect, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != expect)
    throw FormatError(std::string("GLLiM header: ") + what + " has wrong length");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string GllimModel::serialize() const {
  nlohmann::json h;
  h["format"] = "vsloc-gllim";
  h["version"] = 1;
  h["K"] = K();
  h["D"] = D();
  h["L"] = L();
  h["covariance"] = covariance_name(covariance_);
  h["param_names"] = param_names_;
  h["u_mean"] = to_json(u_std_.mean);
  h["u_scale"] = to_json(u_std_.scale);
  h["y_mean"] = to_json(y_std_.mean);
  h["y_scale"] = to_json(y_std_.scale);
  const std::string header = h.dump();
  std::string out(kMagic, 8);
  put_u64(out, header.size());
  out += header;
  const std::size_t l = L();
  for (const auto& c : components_) {
    put_doubles(out, &c.pi, 1);
    put_doubles(out, c.c.data(), l);
    for (std::size_t r = 0; r < l; ++r)
      for (std::size_t q = 0; q < l; ++q)
        put_doubles(out, &c.gamma(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)), 1);
    put_doubles(out, c.a.data(), c.a.size());  // column-major
    put_doubles(out, c.b.data(), c.b.size());
    put_doubles(out, c.sigma.data(), c.sigma.size());
  }
  return out;
}

GllimModel GllimModel::deserialize(std::string_view bytes) {
  Reader r(bytes);
  char magic[8];
  r.take(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw FormatError("not a GLLiM model file (bad magic)");
  std::uint64_t header_len = 0;
  r.take(&header_len, 8);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(r.view(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("GLLiM header: ") + e.what());
  }
  if (h.value("format", "") != "vsloc-gllim" || h.value("version", 0) != 1)
    throw FormatError("GLLiM header: expected format vsloc-gllim version 1");
  const auto k = h.at("K").get<std::size_t>();
  const auto d = h.at("D").get<std::size_t>();
  const auto l = h.at("L").get<std::size_t>();
  Standardization us{vector_from(h.at("u_mean"), l, "u_mean"),
                     vector_from(h.at("u_scale"), l, "u_scale")};
  Standardization ys{vector_from(h.at("y_mean"), d, "y_mean"),
                     vector_from(h.at("y_scale"), d, "y_scale")};
  const auto li = static_cast<Eigen::Index>(l);
  const auto di = static_cast<Eigen::Index>(d);
  std::vector<GllimComponent> comps(k);
  for (auto& c : comps) {
    r.doubles(&c.pi, 1);
    c.c.resize(li);
    r.doubles(c.c.data(), l);
    c.gamma.resize(li, li);
    for (Eigen::Index i = 0; i < li; ++i)
      for (Eigen::Index j = 0; j < li; ++j) r.doubles(&c.gamma(i, j), 1);
    c.a.resize(di, li);
    r.doubles(c.a.data(), d * l);
    c.b.resize(di);
    r.doubles(c.b.data(), d);
    c.sigma.resize(di);
    r.doubles(c.sigma.data(), d);
  }
  if (!r.done()) throw FormatError("GLLiM model file has trailing bytes");
  try {
    return GllimModel(std::move(comps), std::move(us), std::move(ys),
                      parse_covariance(h.at("covariance").get<std::string>()),
                      h.value("param_names", std::vector<std::string>{}));
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("GLLiM model file: ") + e.what());
  }
}

void GllimModel::save(const std::filesystem::path& path) const {
  write_file_atomic(path, serialize());
}

GllimModel GllimModel::load(const std::filesystem::path& path) {
  return deserialize(read_file(path));
}

}  // namespace vsloc
