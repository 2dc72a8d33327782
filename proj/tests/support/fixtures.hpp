#pragma once

// Synthetic GLLiM training sets shared by the unit and acceptance tests.

#include <random>

#include "vsloc/gllim.hpp"

namespace fixture {

// y = A u + b exactly, u uniform on [-1, 1]^L.
inline vsloc::TrainingSet affine(std::size_t n, std::size_t d, std::size_t l, std::uint64_t seed,
                                 double noise = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(d, l);
  Eigen::VectorXd b(d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = 3.0 * g(rng);
  vsloc::TrainingSet ts;
  ts.u.resize(n, l);
  ts.y.resize(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    Eigen::VectorXd x(l);
    for (auto& v : x) v = u(rng);
    const Eigen::VectorXd y = a * x + b;
    ts.u.row(r) = x.transpose();
    for (std::size_t c = 0; c < d; ++c) ts.y(r, c) = y[c] + noise * g(rng);
  }
  return ts;
}

// Samples of a 3-component GLLiM: u ~ N(c_k, I) with c_k = (4k, 0), then
// y = A_k u + b_k + 0.01 noise. The same map_seed gives the same maps.
inline vsloc::TrainingSet three_component(std::size_t n, std::size_t d, std::uint64_t map_seed,
                                          std::uint64_t sample_seed) {
  std::mt19937_64 mrng(map_seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a[3];
  Eigen::VectorXd b[3];
  for (int k = 0; k < 3; ++k) {
    a[k] = Eigen::MatrixXd(d, 2);
    b[k] = Eigen::VectorXd(d);
    for (Eigen::Index i = 0; i < a[k].size(); ++i) a[k].data()[i] = g(mrng);
    for (Eigen::Index i = 0; i < b[k].size(); ++i) b[k][i] = 3.0 * g(mrng);
  }
  std::mt19937_64 rng(sample_seed);
  vsloc::TrainingSet ts;
  ts.u.resize(n, 2);
  ts.y.resize(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const int k = static_cast<int>(r % 3);
    const Eigen::Vector2d x(4.0 * k + g(rng), g(rng));
    const Eigen::VectorXd y = a[k] * x + b[k];
    ts.u.row(r) = x.transpose();
    for (std::size_t c = 0; c < d; ++c) ts.y(r, c) = y[c] + 0.01 * g(rng);
  }
  return ts;
}

inline bool non_decreasing(const std::vector<double>& ll) {
  for (std::size_t i = 1; i < ll.size(); ++i)
    if (ll[i] < ll[i - 1] - 1e-9 * std::abs(ll[i - 1])) return false;
  return true;
}

}  // namespace fixture
