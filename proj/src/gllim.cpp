#include "vsloc/gllim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "vsloc/error.hpp"
#include "vsloc/kernels.hpp"
#include "vsloc/util.hpp"

namespace vsloc {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)
constexpr double kNegligible = 1e-15;              // responsibilities below are skipped

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Cholesky-based Gaussian log density helper for the L-dimensional factor.
struct LowGaussian {
  Eigen::LLT<Eigen::MatrixXd> chol;
  Eigen::VectorXd mean;
  double log_norm = 0.0;  // -0.5 (L log 2pi + log det Gamma)

  LowGaussian(const Eigen::VectorXd& c, const Eigen::MatrixXd& gamma) : chol(gamma), mean(c) {
    if (chol.info() != Eigen::Success) throw Error("GLLiM: Gamma is not positive definite");
    double log_det = 0.0;
    const auto& lm = chol.matrixLLT();
    for (Eigen::Index i = 0; i < lm.rows(); ++i) log_det += 2.0 * std::log(lm(i, i));
    log_norm = -0.5 * (static_cast<double>(c.size()) * kLog2Pi + log_det);
  }

  double log_density(const double* u) const {
    const Eigen::Index l = mean.size();
    Eigen::VectorXd d(l);
    for (Eigen::Index i = 0; i < l; ++i) d(i) = u[i] - mean(i);
    const Eigen::VectorXd z = chol.matrixL().solve(d);
    return log_norm - 0.5 * z.squaredNorm();
  }
};

// Per-component constants of the joint density in standardized space.
struct JointTerms {
  LowGaussian low;
  Eigen::VectorXd sigma_inv;
  double log_weight;  // log pi - 0.5 (D log 2pi + log det Sigma)
};

std::vector<JointTerms> joint_terms(const std::vector<GllimComponent>& comps) {
  std::vector<JointTerms> out;
  out.reserve(comps.size());
  for (const auto& c : comps) {
    const auto d = static_cast<double>(c.sigma.size());
    const double log_det = c.sigma.array().log().sum();
    out.push_back({LowGaussian(c.c, c.gamma), c.sigma.cwiseInverse(),
                   std::log(c.pi) - 0.5 * (d * kLog2Pi + log_det)});
  }
  return out;
}

double log_joint(const GllimComponent& comp, const JointTerms& t, const double* u,
                 const double* y) {
  const auto& k = kernels::active();
  const std::size_t d = static_cast<std::size_t>(comp.b.size());
  const std::size_t l = static_cast<std::size_t>(comp.c.size());
  const double q =
      k.affine_residual_sq(y, comp.b.data(), comp.a.data(), u, l, t.sigma_inv.data(), d);
  return t.log_weight + t.low.log_density(u) - 0.5 * q;
}

Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& m, double floor) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

struct EmState {
  const RowMatrix& u;  // standardized
  const RowMatrix& y;
  const EmConfig& cfg;
};

// Weighted moments of one component given its responsibility column.
GllimComponent m_step_component(const EmState& s, const double* resp, std::size_t stride,
                                double total_n) {
  const Eigen::Index n = s.u.rows();
  const Eigen::Index l = s.u.cols();
  const Eigen::Index d = s.y.cols();
  const auto& kt = kernels::active();
  GllimComponent c;
  double rk = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) rk += resp[i * stride];
  c.pi = rk / total_n;
  c.c = Eigen::VectorXd::Zero(l);
  c.gamma = Eigen::MatrixXd::Zero(l, l);
  c.a = Eigen::MatrixXd::Zero(d, l);
  c.b = Eigen::VectorXd::Zero(d);
  c.sigma = Eigen::VectorXd::Constant(d, 1.0);
  if (rk <= 0.0) return c;

  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = resp[i * stride];
    if (r < kNegligible) continue;
    c.c += r * s.u.row(i).transpose();
  }
  c.c /= rk;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = resp[i * stride];
    if (r < kNegligible) continue;
    const Eigen::VectorXd du = s.u.row(i).transpose() - c.c;
    c.gamma.noalias() += r * du * du.transpose();
  }
  c.gamma = floor_eigenvalues(c.gamma / rk, s.cfg.variance_floor);

  // Weighted least squares for [A b]: solve G W^T = M^T with
  // G = sum r x x^T, M = sum r y x^T and x = [u; 1].
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(l + 1, l + 1);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, l + 1);  // column-major: columns are contiguous
  Eigen::VectorXd x(l + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = resp[i * stride];
    if (r < kNegligible) continue;
    x.head(l) = s.u.row(i).transpose();
    x(l) = 1.0;
    g.noalias() += r * x * x.transpose();
    const double* yi = s.y.row(i).data();
    for (Eigen::Index j = 0; j <= l; ++j)
      kt.axpy(r * x(j), yi, m.col(j).data(), static_cast<std::size_t>(d));
  }
  const double ridge = 1e-12 * g.trace() / static_cast<double>(l + 1);
  g.diagonal().array() += ridge;
  const Eigen::MatrixXd w = g.ldlt().solve(m.transpose()).transpose();  // D x (L+1)
  c.a = w.leftCols(l);
  c.b = w.col(l);

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = resp[i * stride];
    if (r < kNegligible) continue;
    kt.affine_residual_sq_acc(s.y.row(i).data(), c.b.data(), c.a.data(), s.u.row(i).data(),
                              static_cast<std::size_t>(l), r, acc.data(),
                              static_cast<std::size_t>(d));
  }
  acc /= rk;
  if (s.cfg.covariance == CovarianceType::isotropic)
    acc.setConstant(acc.mean());
  c.sigma = acc.cwiseMax(s.cfg.variance_floor);
  return c;
}

std::vector<GllimComponent> m_step(const EmState& s, const RowMatrix& resp) {
  const std::size_t k = static_cast<std::size_t>(resp.cols());
  std::vector<GllimComponent> comps(k);
  // resp is row-major N x K: the column for component j starts at data() + j
  // with stride K.
  parallel_for(k, s.cfg.jobs, [&](std::size_t j) {
    comps[j] = m_step_component(s, resp.data() + j, k, static_cast<double>(resp.rows()));
  });
  return comps;
}

// Responsibilities and per-sample log-likelihoods.
double e_step(const EmState& s, const std::vector<GllimComponent>& comps, RowMatrix& resp,
              std::vector<double>& ll_n) {
  const auto terms = joint_terms(comps);
  const std::size_t n = static_cast<std::size_t>(s.u.rows());
  const std::size_t k = comps.size();
  resp.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  ll_n.assign(n, 0.0);
  parallel_for(n, s.cfg.jobs, [&](std::size_t i) {
    std::vector<double> lj(k);
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < k; ++j)
      lj[j] = log_joint(comps[j], terms[j], s.u.row(row).data(), s.y.row(row).data());
    const double lse = log_sum_exp(lj);
    ll_n[i] = lse;
    for (std::size_t j = 0; j < k; ++j)
      resp(row, static_cast<Eigen::Index>(j)) = std::exp(lj[j] - lse);
  });
  double total = 0.0;
  for (double v : ll_n) total += v;
  return total;
}

// Top principal directions of the centred rows of x by subspace iteration.
Eigen::MatrixXd principal_scores(const RowMatrix& x, int count, Rng& rng) {
  const Eigen::Index q = std::min<Eigen::Index>({count, x.cols(), x.rows()});
  if (q <= 0) return Eigen::MatrixXd(x.rows(), 0);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd basis(x.cols(), q);
  for (Eigen::Index j = 0; j < q; ++j)
    for (Eigen::Index i = 0; i < x.cols(); ++i) basis(i, j) = normal(rng);
  for (int it = 0; it < 12; ++it) {
    const Eigen::MatrixXd proj = x * basis;
    const Eigen::MatrixXd back = x.transpose() * proj;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(back);
    basis = qr.householderQ() * Eigen::MatrixXd::Identity(x.cols(), q);
  }
  return x * basis;
}

double sq_dist(const Eigen::MatrixXd& z, Eigen::Index i, const Eigen::MatrixXd& centres,
               Eigen::Index j) {
  return (z.row(i) - centres.row(j)).squaredNorm();
}

std::vector<int> kmeans(const Eigen::MatrixXd& z, int k, int max_iter, Rng& rng) {
  const Eigen::Index n = z.rows();
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::MatrixXd centres(k, z.cols());
  // k-means++ seeding.
  centres.row(0) = z.row(static_cast<Eigen::Index>(uni(rng) * static_cast<double>(n)) % n);
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      best[i] = std::min(best[i], sq_dist(z, i, centres, j - 1));
      total += best[i];
    }
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      double target = uni(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= best[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = j % n;
    }
    centres.row(j) = z.row(pick);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int arg = 0;
      double bd = sq_dist(z, i, centres, 0);
      for (int j = 1; j < k; ++j) {
        const double dj = sq_dist(z, i, centres, j);
        if (dj < bd) {
          bd = dj;
          arg = j;
        }
      }
      if (assign[i] != arg) {
        assign[i] = arg;
        changed = true;
      }
    }
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, z.cols());
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sum.row(assign[i]) += z.row(i);
      ++count[assign[i]];
    }
    for (int j = 0; j < k; ++j) {
      if (count[j] > 0) {
        centres.row(j) = sum.row(j) / count[j];
        continue;
      }
      // Empty cluster: move it onto the point farthest from its centre.
      Eigen::Index far = 0;
      double fd = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double di = sq_dist(z, i, centres, assign[i]);
        if (di > fd && count[assign[i]] > 1) {
          fd = di;
          far = i;
        }
      }
      --count[assign[far]];
      assign[far] = j;
      count[j] = 1;
      centres.row(j) = z.row(far);
      changed = true;
    }
    if (!changed) break;
  }
  return assign;
}

}  // namespace

std::string covariance_name(CovarianceType t) {
  return t == CovarianceType::diagonal ? "diagonal" : "isotropic";
}

CovarianceType parse_covariance(const std::string& name) {
  if (name == "diagonal") return CovarianceType::diagonal;
  if (name == "isotropic") return CovarianceType::isotropic;
  throw ConfigError("unknown covariance type '" + name + "' (expected diagonal or isotropic)");
}

void TrainingSet::validate() const {
  if (y.rows() != u.rows())
    throw DimensionMismatch("training set: " + std::to_string(y.rows()) + " feature rows but " +
                            std::to_string(u.rows()) + " parameter rows");
  if (!y.allFinite() || !u.allFinite()) throw Error("training set contains non-finite values");
  if (!param_names.empty() && param_names.size() != static_cast<std::size_t>(u.cols()))
    throw DimensionMismatch("training set: parameter name count differs from L");
}

Standardization Standardization::identity(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)};
}

Standardization Standardization::fit(const RowMatrix& x) {
  Standardization s;
  const auto n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().sum() / n;
    // Constant columns keep unit scale rather than dividing by zero.
    s.scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

GllimModel::GllimModel(std::vector<GllimComponent> components, Standardization u_std,
                       Standardization y_std, CovarianceType covariance,
                       std::vector<std::string> param_names)
    : components_(std::move(components)),
      u_std_(std::move(u_std)),
      y_std_(std::move(y_std)),
      covariance_(covariance),
      param_names_(std::move(param_names)) {
  if (components_.empty()) throw DimensionMismatch("GLLiM model needs at least one component");
  const Eigen::Index l = u_std_.mean.size();
  const Eigen::Index d = y_std_.mean.size();
  if (u_std_.scale.size() != l || y_std_.scale.size() != d)
    throw DimensionMismatch("standardization mean/scale sizes differ");
  if (!param_names_.empty() && param_names_.size() != static_cast<std::size_t>(l))
    throw DimensionMismatch("parameter name count differs from L");
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.c.size() != l || c.gamma.rows() != l || c.gamma.cols() != l || c.a.rows() != d ||
        c.a.cols() != l || c.b.size() != d || c.sigma.size() != d)
      throw DimensionMismatch("GLLiM component shapes do not match D and L");
    if (!(c.pi > 0.0)) throw Error("GLLiM component weight must be positive");
    if (!(c.sigma.array() > 0.0).all()) throw Error("GLLiM noise variances must be positive");
    total += c.pi;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("GLLiM component weights must sum to 1");
  prepare();
}

void GllimModel::prepare() {
  inverse_.clear();
  const double d = static_cast<double>(D());
  for (const auto& c : components_) {
    Inverse inv;
    inv.sigma_inv = c.sigma.cwiseInverse();
    inv.a_t_sigma_inv = c.a.transpose() * inv.sigma_inv.asDiagonal();
    const Eigen::MatrixXd gamma_inv = c.gamma.llt().solve(Eigen::MatrixXd::Identity(L(), L()));
    const Eigen::MatrixXd precision = gamma_inv + inv.a_t_sigma_inv * c.a;
    Eigen::LLT<Eigen::MatrixXd> pchol(precision);
    if (pchol.info() != Eigen::Success) throw Error("GLLiM: inverse precision not positive definite");
    inv.sigma_star = pchol.solve(Eigen::MatrixXd::Identity(L(), L()));
    inv.a_star = inv.sigma_star * inv.a_t_sigma_inv;
    inv.b_star = inv.sigma_star * (gamma_inv * c.c - inv.a_t_sigma_inv * c.b);
    inv.offset = c.a * c.c + c.b;
    // log det(Sigma + A Gamma A^T) = log det Sigma + log det Gamma + log det(precision)
    double log_det_precision = 0.0;
    for (Eigen::Index i = 0; i < pchol.matrixLLT().rows(); ++i)
      log_det_precision += 2.0 * std::log(pchol.matrixLLT()(i, i));
    Eigen::LLT<Eigen::MatrixXd> gchol(c.gamma);
    double log_det_gamma = 0.0;
    for (Eigen::Index i = 0; i < gchol.matrixLLT().rows(); ++i)
      log_det_gamma += 2.0 * std::log(gchol.matrixLLT()(i, i));
    const double log_det = c.sigma.array().log().sum() + log_det_gamma + log_det_precision;
    inv.log_norm = std::log(c.pi) - 0.5 * (d * kLog2Pi + log_det);
    inverse_.push_back(std::move(inv));
  }
}

InversePrediction GllimModel::inverse_predict(std::span<const double> y) const {
  if (y.size() != D())
    throw DimensionMismatch("inverse_predict: feature has dimension " + std::to_string(y.size()) +
                            ", model expects " + std::to_string(D()));
  const auto d = static_cast<Eigen::Index>(D());
  Eigen::VectorXd ys(d);
  for (Eigen::Index i = 0; i < d; ++i) ys(i) = (y[i] - y_std_.mean(i)) / y_std_.scale(i);
  const auto& kt = kernels::active();
  std::vector<double> logw(K());
  std::vector<Eigen::VectorXd> uk(K());
  for (std::size_t k = 0; k < K(); ++k) {
    const auto& inv = inverse_[k];
    const double q = kt.affine_residual_sq(ys.data(), inv.offset.data(), nullptr, nullptr, 0,
                                           inv.sigma_inv.data(), D());
    const Eigen::VectorXd v = inv.a_t_sigma_inv * (ys - inv.offset);
    const double quad = q - v.dot(inv.sigma_star * v);
    logw[k] = inv.log_norm - 0.5 * quad;
    uk[k] = inv.a_star * ys + inv.b_star;
  }
  const double lse = log_sum_exp(logw);
  InversePrediction out;
  out.weights.resize(static_cast<Eigen::Index>(K()));
  out.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L()));
  for (std::size_t k = 0; k < K(); ++k) {
    const double w = std::exp(logw[k] - lse);
    out.weights(static_cast<Eigen::Index>(k)) = w;
    out.u += w * uk[k];
  }
  out.u = u_std_.mean + u_std_.scale.cwiseProduct(out.u);
  return out;
}

Eigen::VectorXd GllimModel::forward_predict(std::span<const double> u) const {
  if (u.size() != L())
    throw DimensionMismatch("forward_predict: parameter has dimension " +
                            std::to_string(u.size()) + ", model expects " + std::to_string(L()));
  const auto l = static_cast<Eigen::Index>(L());
  Eigen::VectorXd us(l);
  for (Eigen::Index i = 0; i < l; ++i) us(i) = (u[i] - u_std_.mean(i)) / u_std_.scale(i);
  std::vector<double> logw(K());
  for (std::size_t k = 0; k < K(); ++k) {
    const LowGaussian g(components_[k].c, components_[k].gamma);
    logw[k] = std::log(components_[k].pi) + g.log_density(us.data());
  }
  const double lse = log_sum_exp(logw);
  Eigen::VectorXd ys = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(D()));
  for (std::size_t k = 0; k < K(); ++k)
    ys += std::exp(logw[k] - lse) * (components_[k].a * us + components_[k].b);
  return y_std_.mean + y_std_.scale.cwiseProduct(ys);
}

double GllimModel::log_likelihood(const TrainingSet& data) const {
  data.validate();
  if (static_cast<std::size_t>(data.y.cols()) != D() ||
      static_cast<std::size_t>(data.u.cols()) != L())
    throw DimensionMismatch("log_likelihood: data dimensions differ from the model");
  const auto terms = joint_terms(components_);
  const double jacobian =
      u_std_.scale.array().log().sum() + y_std_.scale.array().log().sum();
  Eigen::VectorXd us(static_cast<Eigen::Index>(L()));
  Eigen::VectorXd ys(static_cast<Eigen::Index>(D()));
  std::vector<double> lj(K());
  double total = 0.0;
  for (Eigen::Index n = 0; n < data.y.rows(); ++n) {
    us = (data.u.row(n).transpose() - u_std_.mean).cwiseQuotient(u_std_.scale);
    ys = (data.y.row(n).transpose() - y_std_.mean).cwiseQuotient(y_std_.scale);
    for (std::size_t k = 0; k < K(); ++k)
      lj[k] = log_joint(components_[k], terms[k], us.data(), ys.data());
    total += log_sum_exp(lj) - jacobian;
  }
  return total;
}

FitResult fit_gllim(const TrainingSet& data, int K, const EmConfig& config, std::uint64_t seed) {
  data.validate();
  if (K < 1) throw Error("GLLiM: K must be >= 1");
  if (config.max_iter < 1) throw ConfigError("GLLiM: max_iter must be >= 1");
  if (!(config.tol >= 0.0)) throw ConfigError("GLLiM: tol must be >= 0");
  if (!(config.variance_floor > 0.0)) throw ConfigError("GLLiM: variance floor must be positive");
  const auto n = static_cast<std::size_t>(data.y.rows());
  const auto l = static_cast<std::size_t>(data.u.cols());
  if (l == 0 || data.y.cols() == 0) throw DimensionMismatch("GLLiM: empty dimensions");
  if (n < static_cast<std::size_t>(K) * (l + 1))
    throw Error("GLLiM: need at least K (L + 1) = " + std::to_string(K * (l + 1)) +
                " samples, got " + std::to_string(n));

  Standardization u_std = Standardization::fit(data.u);
  Standardization y_std = Standardization::fit(data.y);
  RowMatrix us = (data.u.rowwise() - u_std.mean.transpose()).array().rowwise() /
                 u_std.scale.transpose().array();
  RowMatrix ys = (data.y.rowwise() - y_std.mean.transpose()).array().rowwise() /
                 y_std.scale.transpose().array();
  const EmState state{us, ys, config};
  Rng rng(mix_seed(seed, 0x67c1));

  // Initial hard partition from k-means on [u, leading principal components
  // of y], the latter block scaled to the same total variance as u.
  Eigen::MatrixXd scores = principal_scores(ys, config.init_pcs, rng);
  if (scores.cols() > 0) {
    const Eigen::RowVectorXd mean = scores.colwise().mean();
    scores.rowwise() -= mean;
    const double var = scores.squaredNorm() / static_cast<double>(n);
    if (var > 0.0) scores *= std::sqrt(static_cast<double>(l) / var);
  }
  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l) + scores.cols());
  z.leftCols(static_cast<Eigen::Index>(l)) = us;
  z.rightCols(scores.cols()) = scores;
  const auto assign = kmeans(z, K, config.kmeans_iter, rng);
  RowMatrix resp = RowMatrix::Zero(static_cast<Eigen::Index>(n), K);
  for (std::size_t i = 0; i < n; ++i) resp(static_cast<Eigen::Index>(i), assign[i]) = 1.0;
  std::vector<GllimComponent> comps = m_step(state, resp);

  FitResult result{GllimModel(comps, u_std, y_std, config.covariance, data.param_names), {}, {},
                   0, false};
  std::vector<double> ll_n;
  // The trace is reported in original units; convergence is judged on the
  // standardized likelihood.
  const double log_jacobian = static_cast<double>(n) * (u_std.scale.array().log().sum() +
                                                        y_std.scale.array().log().sum());
  double prev = 0.0;
  const double min_mass = 0.1;  // responsibility mass, i.e. pi < 1 / (10 N)
  for (int it = 0; it < config.max_iter; ++it) {
    const double ll = e_step(state, comps, resp, ll_n);
    result.log_likelihood.push_back(ll - log_jacobian);
    result.iterations = it + 1;
    if (it > 0 && std::abs(ll - prev) <= config.tol * std::abs(prev)) {
      result.converged = true;
      break;
    }
    prev = ll;
    comps = m_step(state, resp);

    // Reseed components that lost their support at the worst-explained
    // samples, copying the local map of the heaviest component.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ll_n[a] < ll_n[b]; });
    std::size_t next_seed = 0;
    bool reseeded = false;
    std::size_t heaviest = 0;
    for (std::size_t k = 1; k < comps.size(); ++k)
      if (comps[k].pi > comps[heaviest].pi) heaviest = k;
    for (std::size_t k = 0; k < comps.size(); ++k) {
      if (comps[k].pi * static_cast<double>(n) >= min_mass) continue;
      const std::size_t at = order[next_seed++ % n];
      const auto row = static_cast<Eigen::Index>(at);
      GllimComponent fresh = comps[heaviest];
      fresh.pi = 1.0 / static_cast<double>(comps.size());
      fresh.c = us.row(row).transpose();
      fresh.gamma = 0.1 * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(l),
                                                   static_cast<Eigen::Index>(l));
      fresh.b = ys.row(row).transpose() - fresh.a * fresh.c;
      std::ostringstream msg;
      msg << "iteration " << it + 1 << ": component " << k << " reinitialised at sample " << at
          << " (responsibility mass " << comps[k].pi * static_cast<double>(n) << ")";
      result.events.push_back(msg.str());
      comps[k] = std::move(fresh);
      reseeded = true;
    }
    if (reseeded) {
      double total = 0.0;
      for (const auto& c : comps) total += c.pi;
      for (auto& c : comps) c.pi /= total;
    }
  }
  result.model = GllimModel(std::move(comps), std::move(u_std), std::move(y_std),
                            config.covariance, data.param_names);
  return result;
}

}  // namespace vsloc
