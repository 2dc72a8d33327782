#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "vsloc/error.hpp"
#include "vsloc/head_model.hpp"

using namespace vsloc;

TEST_CASE("spherical head at the front is symmetric") {
  const auto f = HeadModel::sphere().ear_filters(0, 0, 16000);
  CHECK(f.left == f.right);
  CHECK(HeadModel::sphere().itd(0, 0) == 0.0);
}

TEST_CASE("mirrored azimuths swap the ears") {
  const HeadModel h = HeadModel::sphere();
  for (double az : {5.0, 30.0, 90.0, 140.0})
    for (double el : {-30.0, 0.0, 20.0}) {
      const auto p = h.ear_filters(az, el, 16000);
      const auto m = h.ear_filters(-az, el, 16000);
      CHECK(p.left == m.right);
      CHECK(p.right == m.left);
    }
}

TEST_CASE("Woodworth ITD at 90 degrees") {
  const HeadModel h = HeadModel::sphere();
  // (0.0875 / 343) (pi/2 + 1) = 655.9 us
  CHECK(h.itd(90, 0) == doctest::Approx(655.9e-6).epsilon(1e-3));
  CHECK(h.itd(-90, 0) == doctest::Approx(-h.itd(90, 0)));
}

TEST_CASE("ITD increases with lateral angle") {
  const HeadModel h = HeadModel::sphere();
  double prev = -1.0;
  for (int az = 0; az <= 90; ++az) {
    const double t = h.itd(az, 0);
    CHECK(t > prev);
    prev = t;
  }
}

TEST_CASE("the far ear is attenuated") {
  const HeadModel h = HeadModel::sphere();
  const auto r = h.sphere_response(60, 0, std::vector<double>{500, 4000});
  CHECK(r.gain_left[1] == 1.0);
  CHECK(r.gain_right[1] < r.gain_right[0]);
  CHECK(r.gain_right[0] < 1.0);
}

TEST_CASE("measured HRIR sets round trip and are looked up by nearest direction") {
  HrirSet set;
  set.sample_rate = 16000;
  for (double az : {-30.0, 0.0, 30.0})
    for (double el : {-15.0, 15.0})
      set.entries.push_back({az, el, {az / 128, 0.25, el / 128}, {0.5, -az / 128, 0.125}});
  const auto dir = std::filesystem::temp_directory_path() / "vsloc_hrir_roundtrip";
  std::filesystem::remove_all(dir);
  save_hrir_set(set, dir);
  const HrirSet back = load_hrir_set(dir);
  REQUIRE(back.entries.size() == set.entries.size());
  for (const auto& e : set.entries) {
    const auto it = std::find_if(back.entries.begin(), back.entries.end(), [&](const HrirEntry& b) {
      return b.azimuth == e.azimuth && b.elevation == e.elevation;
    });
    REQUIRE(it != back.entries.end());
    CHECK(it->left == e.left);
    CHECK(it->right == e.right);
  }
  const HeadModel h = HeadModel::measured(back);
  const auto f = h.ear_filters(26, 10, 16000);
  CHECK(f.left == (std::vector<double>{30.0 / 128, 0.25, 15.0 / 128}));
  std::filesystem::remove_all(dir);
}

TEST_CASE("an empty HRIR set is rejected") {
  HrirSet set;
  set.sample_rate = 16000;
  CHECK_THROWS_AS(set.validate(), InvalidScene);
}
