#pragma once

// Gaussian locally-linear mapping: a K-component joint mixture
//   p(u, y) = sum_k pi_k N(u; c_k, Gamma_k) N(y; A_k u + b_k, Sigma_k)
// fitted by EM, inverted by Gaussian conditioning to predict u from y.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vsloc {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class CovarianceType { diagonal, isotropic };

std::string covariance_name(CovarianceType t);
CovarianceType parse_covariance(const std::string& name);

struct TrainingSet {
  RowMatrix y;  // N x D features
  RowMatrix u;  // N x L parameters
  std::vector<std::string> param_names;

  std::size_t size() const { return static_cast<std::size_t>(y.rows()); }
  // Throws DimensionMismatch on row-count disagreement, Error on non-finite values.
  void validate() const;
};

struct GllimComponent {
  double pi = 0.0;
  Eigen::VectorXd c;      // L
  Eigen::MatrixXd gamma;  // L x L
  Eigen::MatrixXd a;      // D x L
  Eigen::VectorXd b;      // D
  Eigen::VectorXd sigma;  // D, diagonal of Sigma_k
};

// Per-dimension affine map x_std = (x - mean) / scale.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardization identity(std::size_t dim);
  static Standardization fit(const RowMatrix& x);
};

struct InversePrediction {
  Eigen::VectorXd u;
  Eigen::VectorXd weights;  // posterior component probabilities p(k | y)
};

// Immutable after construction; predictions are safe to run concurrently.
// Components are held in the standardized coordinates of u and y; every
// public method takes and returns original units.
class GllimModel {
 public:
  GllimModel(std::vector<GllimComponent> components, Standardization u_std,
             Standardization y_std, CovarianceType covariance,
             std::vector<std::string> param_names = {});

  std::size_t K() const { return components_.size(); }
  std::size_t D() const { return static_cast<std::size_t>(y_std_.mean.size()); }
  std::size_t L() const { return static_cast<std::size_t>(u_std_.mean.size()); }
  CovarianceType covariance() const { return covariance_; }
  const std::vector<GllimComponent>& components() const { return components_; }
  const Standardization& u_standardization() const { return u_std_; }
  const Standardization& y_standardization() const { return y_std_; }
  const std::vector<std::string>& param_names() const { return param_names_; }

  InversePrediction inverse_predict(std::span<const double> y) const;
  Eigen::VectorXd forward_predict(std::span<const double> u) const;
  // log p(u_n, y_n) summed over the rows, in original units.
  double log_likelihood(const TrainingSet& data) const;

  // Binary layout documented in docs/formats.md; round trips bit-exactly.
  void save(const std::filesystem::path& path) const;
  static GllimModel load(const std::filesystem::path& path);
  std::string serialize() const;
  static GllimModel deserialize(std::string_view bytes);

 private:
  struct Inverse {
    Eigen::MatrixXd a_star;  // L x D
    Eigen::VectorXd b_star;  // L
    Eigen::VectorXd offset;  // A c + b
    Eigen::VectorXd sigma_inv;
    Eigen::MatrixXd sigma_star;
    Eigen::MatrixXd a_t_sigma_inv;  // L x D
    double log_norm = 0.0;  // log pi - 0.5 (D log 2pi + log det(Sigma + A Gamma A^T))
  };
  void prepare();

  std::vector<GllimComponent> components_;
  Standardization u_std_;
  Standardization y_std_;
  CovarianceType covariance_;
  std::vector<std::string> param_names_;
  std::vector<Inverse> inverse_;
};

struct EmConfig {
  int max_iter = 200;
  double tol = 1e-6;  // relative log-likelihood gain
  CovarianceType covariance = CovarianceType::diagonal;
  int init_pcs = 20;
  int kmeans_iter = 100;
  double variance_floor = 1e-8;  // in standardized units
  unsigned jobs = 1;
};

struct FitResult {
  GllimModel model;
  std::vector<double> log_likelihood;  // one entry per EM iteration
  std::vector<std::string> events;     // component reinitialisations
  int iterations = 0;
  bool converged = false;
};

// Throws Error for non-finite data or N < K (L + 1).
FitResult fit_gllim(const TrainingSet& data, int K, const EmConfig& config, std::uint64_t seed);

}  // namespace vsloc
