#include "vsloc/image_source.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "vsloc/error.hpp"

namespace vsloc {
namespace {

struct AxisImage {
  double coord;
  int n;
  int p;
  int lower_hits;
  int upper_hits;
  int order() const { return lower_hits + upper_hits; }
};

// The images of a single axis with exactly `order` reflections on that axis.
void axis_images(double s, double len, int order, std::vector<AxisImage>& out) {
  out.clear();
  auto push = [&](int n, int p) {
    out.push_back({(1 - 2 * p) * s + 2.0 * n * len, n, p, std::abs(n - p), std::abs(n)});
  };
  if (order == 0) {
    push(0, 0);
  } else if (order % 2 == 0) {
    push(-order / 2, 0);
    push(order / 2, 0);
  } else {
    push((1 - order) / 2, 1);
    push((order + 1) / 2, 1);
  }
}

// Per-surface, per-band amplitude factors sqrt(1 - alpha).
std::array<std::vector<double>, kSurfaceCount> reflection_factors(const RoomSpec& room) {
  std::array<std::vector<double>, kSurfaceCount> f;
  for (int s = 0; s < kSurfaceCount; ++s) {
    for (double a : room.surfaces[s].absorption) f[s].push_back(std::sqrt(1.0 - a));
  }
  return f;
}

class ShellWalker {
 public:
  ShellWalker(const RoomSpec& room, Vec3 src) : room_(room), src_(src) {}

  // Calls fn(AxisImage x, AxisImage y, AxisImage z) for every image of total
  // order `order`.
  template <class Fn>
  void for_each(int order, Fn&& fn) {
    for (int ox = 0; ox <= order; ++ox) {
      axis_images(src_.x, room_.width, ox, xs_);
      for (int oy = 0; ox + oy <= order; ++oy) {
        axis_images(src_.y, room_.depth, oy, ys_);
        axis_images(src_.z, room_.height, order - ox - oy, zs_);
        for (const auto& ix : xs_)
          for (const auto& iy : ys_)
            for (const auto& iz : zs_) fn(ix, iy, iz);
      }
    }
  }

 private:
  const RoomSpec& room_;
  Vec3 src_;
  std::vector<AxisImage> xs_, ys_, zs_;
};

std::array<int, kSurfaceCount> hits_of(const AxisImage& x, const AxisImage& y,
                                       const AxisImage& z) {
  return {x.lower_hits, x.upper_hits, y.lower_hits, y.upper_hits, z.lower_hits, z.upper_hits};
}

std::vector<double> band_gains_of(const std::array<std::vector<double>, kSurfaceCount>& factors,
                                  const std::array<int, kSurfaceCount>& hits) {
  const std::size_t bands = factors[0].size();
  std::vector<double> g(bands, 1.0);
  for (int s = 0; s < kSurfaceCount; ++s) {
    if (hits[s] == 0) continue;
    for (std::size_t b = 0; b < bands; ++b) g[b] *= std::pow(factors[s][b], hits[s]);
  }
  return g;
}

}  // namespace

double ImageSource::peak_gain() const {
  return band_gains.empty() ? 0.0 : *std::max_element(band_gains.begin(), band_gains.end());
}

std::vector<Surface> reflection_sequence(const ImageSource& image, const RoomSpec& room) {
  struct Crossing {
    double t;
    int axis;
    Surface surface;
  };
  std::vector<Crossing> crossings;
  const Vec3 from = image.position;
  const Vec3 to = room.receiver;
  for (int axis = 0; axis < 3; ++axis) {
    const double len = room.dimension(axis);
    const double a = from[axis];
    const double b = to[axis];
    if (a == b) continue;
    // Planes m * len strictly between the image cell and the receiver cell.
    const auto lo = static_cast<long>(std::floor(std::min(a, b) / len)) + 1;
    const auto hi = static_cast<long>(std::ceil(std::max(a, b) / len)) - 1;
    for (long m = lo; m <= hi; ++m) {
      const double plane = static_cast<double>(m) * len;
      const Surface s = static_cast<Surface>(2 * axis + (std::abs(m) % 2 == 0 ? 0 : 1));
      crossings.push_back({(plane - a) / (b - a), axis, s});
    }
  }
  std::sort(crossings.begin(), crossings.end(), [](const Crossing& l, const Crossing& r) {
    return l.t != r.t ? l.t < r.t : l.axis < r.axis;
  });
  std::vector<Surface> seq;
  seq.reserve(crossings.size());
  for (const auto& c : crossings) seq.push_back(c.surface);
  return seq;
}

std::vector<ImageSource> enumerate_image_sources(const RoomSpec& room, const SourceSpec& source,
                                                 int max_order, double max_distance) {
  room.validate();
  return enumerate_image_sources(room, source_position(room, source), max_order, max_distance);
}

std::vector<ImageSource> enumerate_image_sources(const RoomSpec& room, Vec3 src, int max_order,
                                                 double max_distance) {
  if (max_order < 0) throw std::invalid_argument("max_order must be >= 0");
  if (!room.contains(src)) throw InvalidScene("source position lies outside the room");
  const auto factors = reflection_factors(room);
  ShellWalker walker(room, src);
  std::vector<ImageSource> images;
  for (int order = 0; order <= max_order; ++order) {
    walker.for_each(order, [&](const AxisImage& x, const AxisImage& y, const AxisImage& z) {
      ImageSource img;
      img.position = {x.coord, y.coord, z.coord};
      if ((img.position - room.receiver).norm() > max_distance) return;
      img.order = order;
      img.lattice = {x.n, y.n, z.n};
      img.mirrored = {x.p, y.p, z.p};
      img.hits = hits_of(x, y, z);
      img.band_gains = band_gains_of(factors, img.hits);
      images.push_back(std::move(img));
    });
  }
  return images;
}

int adaptive_max_order(const RoomSpec& room, Vec3 src, double threshold_db, double max_distance,
                       int cap) {
  const double direct = 1.0 / (src - room.receiver).norm();
  const double floor_amp = direct * std::pow(10.0, -threshold_db / 20.0);
  const auto factors = reflection_factors(room);
  ShellWalker walker(room, src);
  for (int order = 1; order <= cap; ++order) {
    double strongest = 0.0;
    walker.for_each(order, [&](const AxisImage& x, const AxisImage& y, const AxisImage& z) {
      const double dist = (Vec3{x.coord, y.coord, z.coord} - room.receiver).norm();
      if (dist > max_distance) return;
      const auto g = band_gains_of(factors, hits_of(x, y, z));
      strongest = std::max(strongest, *std::max_element(g.begin(), g.end()) / dist);
    });
    if (strongest <= floor_amp) return order - 1;
  }
  return cap;
}

}  // namespace vsloc
