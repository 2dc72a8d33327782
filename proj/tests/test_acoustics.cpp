#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "support/oracles.hpp"
#include "vsloc/dsp.hpp"
#include "vsloc/error.hpp"
#include "vsloc/image_source.hpp"
#include "vsloc/rain_diffusion.hpp"
#include "vsloc/render.hpp"
#include "vsloc/rt60.hpp"

using namespace vsloc;

namespace {

double energy(const std::vector<double>& x) {
  return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
}

SimConfig specular_only() {
  SimConfig cfg;
  cfg.diffusion = false;
  return cfg;
}

}  // namespace

TEST_CASE("image sources of order 0 and 1") {
  const RoomSpec room = RoomSpec::default_room();
  const auto zero = enumerate_image_sources(room, SourceSpec{30, 0, 1.5}, 0);
  REQUIRE(zero.size() == 1);
  for (double g : zero[0].band_gains) CHECK(g == 1.0);
  CHECK(enumerate_image_sources(room, SourceSpec{30, 0, 1.5}, 1).size() == 7);
}

TEST_CASE("image sources match the brute-force mirror oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    RoomSpec room = oracle::random_room(rng);
    const Vec3 src = oracle::random_point(room, rng);
    const int order = 3;
    auto got = enumerate_image_sources(room, src, order);
    auto want = oracle::mirror_images(room, src, order);
    REQUIRE(got.size() == want.size());
    auto less = [](Vec3 a, Vec3 b) { return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z); };
    std::sort(got.begin(), got.end(), [&](auto& a, auto& b) { return less(a.position, b.position); });
    std::sort(want.begin(), want.end(), [&](auto& a, auto& b) { return less(a.position, b.position); });
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK((got[i].position - want[i].position).norm() < 1e-9);
      CHECK(got[i].order == want[i].order);
      for (std::size_t b = 0; b < room.anchors().size(); ++b) {
        double g = 1.0;
        for (int s = 0; s < kSurfaceCount; ++s)
          g *= std::pow(std::sqrt(1.0 - room.surfaces[static_cast<std::size_t>(s)].absorption[b]),
                        want[i].hits[static_cast<std::size_t>(s)]);
        CHECK(got[i].band_gains[b] == doctest::Approx(g).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("a source outside the room is rejected with its coordinate") {
  const RoomSpec room = RoomSpec::default_room();
  try {
    enumerate_image_sources(room, SourceSpec{90, 0, 4.0}, 1);
    FAIL("expected InvalidScene");
  } catch (const InvalidScene& e) {
    CHECK(std::string(e.what()).find("y =") != std::string::npos);
  }
}

TEST_CASE("direct path arrives after distance / c") {
  RoomSpec room = RoomSpec::default_room();
  const auto images = enumerate_image_sources(room, SourceSpec{0, 0, 1.0}, 0);
  const BinauralRir rir = render_specular_rir(images, room, HeadModel::sphere(), 16000, 0.05);
  const double expect = 1.0 / 343.0 * 16000;  // 46.65 samples = 2.915 ms
  for (const auto* ch : {&rir.left, &rir.right}) {
    const auto peak = std::max_element(ch->begin(), ch->end(),
                                       [](double a, double b) { return std::abs(a) < std::abs(b); });
    CHECK(std::abs(static_cast<double>(peak - ch->begin()) - expect) <= 1.0);
  }
  CHECK(rir.left == rir.right);
}

TEST_CASE("free-field amplitude follows the 1/distance law") {
  RoomSpec room = RoomSpec::default_room();
  auto peak_of = [&](double range) {
    const auto images = enumerate_image_sources(room, SourceSpec{0, 0, range}, 0);
    const auto rir = render_specular_rir(images, room, HeadModel::sphere(), 16000, 0.05);
    return std::sqrt(energy(rir.left));
  };
  // Energy of the band-limited pulse is shift-invariant up to interpolator ripple.
  CHECK(peak_of(2.0) / peak_of(1.0) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("fully absorbing surfaces leave only the direct path") {
  RoomSpec room = RoomSpec::default_room(1.0);
  for (auto& s : room.surfaces) std::fill(s.absorption.begin(), s.absorption.end(), 1.0);
  const SourceSpec src{20, 10, 1.5};
  const auto all = enumerate_image_sources(room, src, 3);
  const auto direct = enumerate_image_sources(room, src, 0);
  const auto a = render_specular_rir(all, room, HeadModel::sphere(), 16000, 0.1);
  const auto b = render_specular_rir(direct, room, HeadModel::sphere(), 16000, 0.1);
  CHECK(a.left == b.left);
  CHECK(a.right == b.right);
}

TEST_CASE("mirrored sources give channel-swapped specular responses") {
  const RoomSpec room = RoomSpec::default_room();  // receiver centred in y
  SimConfig cfg;
  cfg.diffusion = false;
  for (double az : {10.0, 35.0, 80.0}) {
    const auto a = simulate_brir(room, {az, 0, 1.4}, HeadModel::sphere(), cfg, 1);
    const auto b = simulate_brir(room, {-az, 0, 1.4}, HeadModel::sphere(), cfg, 1);
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      diff = std::max({diff, std::abs(a.left[i] - b.right[i]), std::abs(a.right[i] - b.left[i])});
      ref = std::max(ref, std::abs(a.left[i]));
    }
    CHECK(diff <= 1e-9 * ref);
  }
}

TEST_CASE("duration shorter than the direct path is an error") {
  RoomSpec room = RoomSpec::default_room();
  const auto images = enumerate_image_sources(room, SourceSpec{0, 0, 2.0}, 0);
  CHECK_THROWS_AS(render_specular_rir(images, room, HeadModel::sphere(), 16000, 0.001), InvalidScene);
}

TEST_CASE("rain diffusion bookkeeping") {
  RoomSpec room = RoomSpec::default_room();
  const SourceSpec src{10, 5, 1.6};
  SUBCASE("zero diffusion deposits nothing") {
    room.set_diffusion(std::vector<double>(6, 0.0));
    CHECK(rain_diffusion(room, src, room.receiver, 500, 0.5, 1).total() == 0.0);
  }
  SUBCASE("full absorption deposits nothing") {
    for (auto& s : room.surfaces) std::fill(s.absorption.begin(), s.absorption.end(), 1.0);
    CHECK(rain_diffusion(room, src, room.receiver, 500, 0.5, 1).total() == 0.0);
  }
  SUBCASE("deposits never exceed the emitted energy") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 10; ++t) {
      RoomSpec r = oracle::random_room(rng);
      const Vec3 p = oracle::random_point(r, rng);
      const Vec3 d = p - r.receiver;
      const double range = d.norm();
      if (range < 0.2) continue;
      const double az = std::atan2(d.y, d.x) * 180.0 / std::numbers::pi;
      const double el = std::asin(d.z / range) * 180.0 / std::numbers::pi;
      const auto h = rain_diffusion(r, SourceSpec{az, el, range}, r.receiver, 300, 0.5, t);
      for (std::size_t b = 0; b < h.bands(); ++b) CHECK(h.band_total(b) <= 1.0 + 1e-12);
    }
  }
  SUBCASE("same seed gives the same histogram") {
    const auto a = rain_diffusion(room, src, room.receiver, 300, 0.3, 4);
    const auto b = rain_diffusion(room, src, room.receiver, 300, 0.3, 4);
    CHECK(a.energy == b.energy);
  }
}

TEST_CASE("diffuse tail follows the histogram") {
  EnergyHistogram h;
  h.bin_width = 0.04;
  h.anchor_frequencies = default_anchor_frequencies();
  h.energy.assign(6, std::vector<double>(10, 0.0));

  SUBCASE("zero histogram gives silence") {
    const auto t = synthesize_diffuse_tail(h, 16000, 1);
    CHECK(energy(t.left) == 0.0);
    CHECK(energy(t.right) == 0.0);
  }
  SUBCASE("one bin of one band stays in its bin and matches its energy") {
    const std::size_t band = 5, bin = 4;
    h.energy[band][bin] = 1e-4;
    const auto t = synthesize_diffuse_tail(h, 16000, 7);
    const auto& bank = dsp::cached_band_filter_bank(h.anchor_frequencies, 16000, 65);
    const double expect = 1e-4 * 4.0 / (h.receiver_radius * h.receiver_radius) *
                          bank.energy_band_norm_sq(band);
    const std::size_t lo = bin * 640 - 32, hi = (bin + 1) * 640 + 32;
    for (const auto* ch : {&t.left, &t.right}) {
      double inside = 0.0;
      for (std::size_t i = lo; i < hi; ++i) inside += (*ch)[i] * (*ch)[i];
      CHECK(inside == doctest::Approx(energy(*ch)).epsilon(1e-12));
      CHECK(inside == doctest::Approx(expect).epsilon(0.2));
    }
    CHECK(t.left != t.right);
  }
}

TEST_CASE("simulation composes specular and diffuse parts deterministically") {
  RoomSpec room = RoomSpec::default_room();
  const SourceSpec src{-25, 10, 1.9};
  SimConfig cfg;
  cfg.n_rays = 500;
  const auto a = simulate_brir(room, src, HeadModel::sphere(), cfg, 3);
  const auto b = simulate_brir(room, src, HeadModel::sphere(), cfg, 3);
  CHECK(a.left == b.left);
  CHECK(a.right == b.right);
  CHECK(a.size() == 8000);

  room.set_diffusion(std::vector<double>(6, 0.0));
  const auto c = simulate_brir(room, src, HeadModel::sphere(), cfg, 3);
  const auto d = simulate_brir(room, src, HeadModel::sphere(), specular_only(), 3);
  CHECK(c.left == d.left);
  CHECK(c.right == d.right);
}

TEST_CASE("RT60 estimation") {
  SUBCASE("pure exponential decay") {
    const double fs = 16000, T = 0.5;
    std::vector<double> x(static_cast<std::size_t>(fs));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::exp(-6.91 * (i / fs) / T);
    CHECK(estimate_rt60(x, fs) == doctest::Approx(T).epsilon(0.1));
  }
  SUBCASE("a single impulse has no decay to fit") {
    std::vector<double> x(1000, 0.0);
    x[10] = 1.0;
    CHECK_THROWS_AS(estimate_rt60(x, 16000), EstimationUnreliable);
  }
  SUBCASE("Schroeder frequency") {
    CHECK(schroeder_frequency(1.0, 6 * 5 * 3.3) == doctest::Approx(201.0).epsilon(0.002));
    CHECK(schroeder_frequency(0.0625, 250000) == doctest::Approx(1.0));
    CHECK(schroeder_frequency(2.0, 99) == doctest::Approx(2 * schroeder_frequency(0.5, 99)));
    CHECK_THROWS(schroeder_frequency(0.0, 99));
    CHECK_THROWS(schroeder_frequency(1.0, -1));
  }
}
