#include <doctest.h>

#include <numeric>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "vsloc/error.hpp"
#include "vsloc/gllim.hpp"

using namespace vsloc;

namespace {

std::span<const double> row(const RowMatrix& m, Eigen::Index r) {
  return {m.row(r).data(), static_cast<std::size_t>(m.cols())};
}

// Mean absolute held-out error relative to the per-parameter range.
double relative_error(const GllimModel& m, const TrainingSet& test) {
  double worst = 0.0;
  for (Eigen::Index c = 0; c < test.u.cols(); ++c) {
    const double range = test.u.col(c).maxCoeff() - test.u.col(c).minCoeff();
    double err = 0.0;
    for (Eigen::Index r = 0; r < test.u.rows(); ++r)
      err += std::abs(m.inverse_predict(row(test.y, r)).u[c] - test.u(r, c));
    worst = std::max(worst, err / static_cast<double>(test.u.rows()) / range);
  }
  return worst;
}

}  // namespace

TEST_CASE("one component recovers a noiseless affine map") {
  const auto ts = fixture::affine(200, 12, 2, 1);
  const auto fit = fit_gllim(ts, 1, {}, 7);
  CHECK(fixture::non_decreasing(fit.log_likelihood));
  for (Eigen::Index r = 0; r < ts.u.rows(); r += 17) {
    const auto p = fit.model.inverse_predict(row(ts.y, r));
    for (Eigen::Index c = 0; c < 2; ++c) CHECK(std::abs(p.u[c] - ts.u(r, c)) < 1e-6);
    const auto y = fit.model.forward_predict(row(ts.u, r));
    for (Eigen::Index c = 0; c < ts.y.cols(); ++c) CHECK(std::abs(y[c] - ts.y(r, c)) < 1e-6);
  }
}

TEST_CASE("three components are recovered on held-out samples") {
  const auto train = fixture::three_component(600, 20, 3, 1);
  const auto test = fixture::three_component(300, 20, 3, 2);
  const auto fit = fit_gllim(train, 3, {}, 11);
  CHECK(fixture::non_decreasing(fit.log_likelihood));
  CHECK(relative_error(fit.model, test) < 0.05);
}

TEST_CASE("log-likelihood matches the dense density oracle") {
  const auto ts = fixture::affine(10, 3, 1, 4, 0.3);
  EmConfig cfg;
  cfg.init_pcs = 2;
  const auto fit = fit_gllim(ts, 2, cfg, 5);
  double oracle_ll = 0.0;
  for (Eigen::Index r = 0; r < ts.u.rows(); ++r)
    oracle_ll += oracle::gllim_log_density(fit.model, ts.u.row(r).transpose(), ts.y.row(r).transpose());
  CHECK(std::abs(fit.model.log_likelihood(ts) - oracle_ll) < 1e-9 * std::max(1.0, std::abs(oracle_ll)));
  // The trace holds the likelihood before each M-step, so it ends within
  // the convergence tolerance of the final model's value.
  CHECK(fit.log_likelihood.back() <= fit.model.log_likelihood(ts) + 1e-9);
}

TEST_CASE("isotropic covariance fits and is monotone") {
  const auto ts = fixture::three_component(300, 10, 8, 3);
  EmConfig cfg;
  cfg.covariance = CovarianceType::isotropic;
  const auto fit = fit_gllim(ts, 3, cfg, 2);
  CHECK(fixture::non_decreasing(fit.log_likelihood));
  for (const auto& k : fit.model.components())
    CHECK((k.sigma.array() == k.sigma[0]).all());
}

TEST_CASE("posterior weights sum to one") {
  const auto ts = fixture::three_component(300, 10, 8, 3);
  const auto fit = fit_gllim(ts, 3, {}, 2);
  for (Eigen::Index r = 0; r < 300; r += 29) {
    const auto p = fit.model.inverse_predict(row(ts.y, r));
    CHECK(p.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((p.weights.array() >= 0.0).all());
  }
}

TEST_CASE("reordering components leaves predictions unchanged") {
  const auto ts = fixture::three_component(300, 10, 8, 3);
  const auto fit = fit_gllim(ts, 3, {}, 2);
  auto comps = fit.model.components();
  std::reverse(comps.begin(), comps.end());
  const GllimModel rev(comps, fit.model.u_standardization(), fit.model.y_standardization(),
                       fit.model.covariance(), fit.model.param_names());
  CHECK(rev.log_likelihood(ts) == doctest::Approx(fit.model.log_likelihood(ts)).epsilon(1e-12));
  for (Eigen::Index r = 0; r < 300; r += 31) {
    const auto a = fit.model.inverse_predict(row(ts.y, r));
    const auto b = rev.inverse_predict(row(ts.y, r));
    CHECK((a.u - b.u).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.weights.reverse() - b.weights).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fitting is deterministic in the seed and the worker count") {
  const auto ts = fixture::three_component(300, 10, 8, 3);
  EmConfig one, four;
  four.jobs = 4;
  const auto a = fit_gllim(ts, 3, one, 9).model.serialize();
  CHECK(a == fit_gllim(ts, 3, one, 9).model.serialize());
  CHECK(a == fit_gllim(ts, 3, four, 9).model.serialize());
}

TEST_CASE("serialisation round trips bit-exactly") {
  auto ts = fixture::three_component(120, 6, 8, 3);
  ts.param_names = {"azimuth", "elevation"};
  const auto fit = fit_gllim(ts, 2, {}, 2);
  const auto bytes = fit.model.serialize();
  const auto back = GllimModel::deserialize(bytes);
  CHECK(back.serialize() == bytes);
  CHECK(back.param_names() == ts.param_names);
  CHECK(back.inverse_predict(row(ts.y, 5)).u == fit.model.inverse_predict(row(ts.y, 5)).u);
  CHECK_THROWS_AS(GllimModel::deserialize(bytes.substr(0, bytes.size() - 8)), FormatError);
  CHECK_THROWS_AS(GllimModel::deserialize("not a model"), FormatError);
}

TEST_CASE("invalid training data is rejected") {
  auto ts = fixture::affine(20, 4, 2, 1);
  CHECK_THROWS(fit_gllim(ts, 8, {}, 1));  // N < K (L + 1)
  ts.y(3, 2) = std::nan("");
  CHECK_THROWS(fit_gllim(ts, 1, {}, 1));
  auto bad = fixture::affine(20, 4, 2, 1);
  bad.u.conservativeResize(19, 2);
  CHECK_THROWS_AS(fit_gllim(bad, 1, {}, 1), DimensionMismatch);
}

TEST_CASE("prediction dimension is checked") {
  const auto ts = fixture::affine(50, 4, 2, 1);
  const auto fit = fit_gllim(ts, 1, {}, 1);
  const std::vector<double> wrong(5, 0.0);
  CHECK_THROWS_AS(fit.model.inverse_predict(wrong), DimensionMismatch);
}
