#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace rrmix {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Bad caller input (non-finite values, dimension mismatches, invalid configs).
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Estimation failed on every attempt (all restarts collapsed, etc.).
class DegenerateFit : public std::runtime_error {
 public:
  explicit DegenerateFit(const std::string& what) : std::runtime_error(what) {}
};

// Observations (x_i, y_i), rows = observations. true_labels is optional
// simulation ground truth (empty when absent).
struct Dataset {
  Matrix X;  // n x p covariates
  Matrix Y;  // n x q responses
  std::vector<int> true_labels;

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
  int q() const { return static_cast<int>(Y.cols()); }

  void validate() const;
};

// Parameters of the K-component Gaussian mixture regression conditional
// density: proportions pi, regression matrices beta_k (q x p, so that the
// component-k mean of y given x is beta_k * x), and diagonal covariances
// stored as the vector of variances sigma_diag[k].
struct MixtureRegressionModel {
  Vector pi;
  std::vector<Matrix> beta;
  std::vector<Vector> sigma_diag;

  int K() const { return static_cast<int>(pi.size()); }
  int q() const { return beta.empty() ? 0 : static_cast<int>(beta[0].rows()); }
  int p() const { return beta.empty() ? 0 : static_cast<int>(beta[0].cols()); }

  void validate(double pi_tol = 1e-12) const;
};

// Rescaled parameterization: P_k is the diagonal Cholesky factor of
// Sigma_k^{-1} (p_diag[k][z] = 1/sd_{k,z}) and phi_k = P_k beta_k, so the
// component residual is P_k y - phi_k x.
struct RescaledParameters {
  std::vector<Matrix> phi;     // K of q x p
  std::vector<Vector> p_diag;  // K of q
};

RescaledParameters to_rescaled(const MixtureRegressionModel& model);
MixtureRegressionModel from_rescaled(const Vector& pi, const RescaledParameters& rp);

// Model identifier: cluster count K, relevant-column set J (sorted,
// zero-based), per-cluster rank vector R.
struct ModelIndex {
  int K = 1;
  std::vector<int> J;
  std::vector<int> R;

  void validate(int p, int q) const;
  bool operator==(const ModelIndex& other) const = default;
};

bool index_less(const ModelIndex& a, const ModelIndex& b);

enum class DimensionMode { MeansOnly, Full };

// Model dimension. MeansOnly is sum_k R(k) (|J| + q - R(k)); Full adds
// (K - 1) proportions and K*q covariance entries.
long dimension(const ModelIndex& index, int q, DimensionMode mode);

// Parameter bounds entering the theoretical penalty constant B:
// a_sigma_sq/A_sigma_sq bound the covariance diagonal (variances),
// A_singular bounds the singular values of the regression matrices.
struct BoundsConfig {
  double a_sigma_sq = 1e-2;
  double A_sigma_sq = 1e2;
  double A_singular = 50.0;

  void validate() const;
};

}  // namespace rrmix
