#include "rrmix/types.hpp"

#include <algorithm>
#include <cmath>

namespace rrmix {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

}  // namespace

void Dataset::validate() const {
  require(X.rows() >= 1, "Dataset: need at least one observation");
  require(X.cols() >= 1 && Y.cols() >= 1, "Dataset: p and q must be positive");
  require(X.rows() == Y.rows(), "Dataset: X and Y row counts differ");
  require(X.allFinite() && Y.allFinite(), "Dataset: non-finite entries");
  if (!true_labels.empty())
    require(static_cast<int>(true_labels.size()) == n(), "Dataset: label length != n");
}

void MixtureRegressionModel::validate(double pi_tol) const {
  require(pi.size() >= 1, "model: K must be positive");
  const int k = K();
  require(static_cast<int>(beta.size()) == k && static_cast<int>(sigma_diag.size()) == k,
          "model: beta/sigma_diag size mismatch with K");
  require((pi.array() > 0.0).all(), "model: proportions must be positive");
  require(std::abs(pi.sum() - 1.0) <= pi_tol, "model: proportions must sum to 1");
  for (int j = 0; j < k; ++j) {
    require(beta[j].rows() == beta[0].rows() && beta[j].cols() == beta[0].cols(),
            "model: inconsistent beta shapes");
    require(beta[j].allFinite(), "model: non-finite beta");
    require(sigma_diag[j].size() == beta[j].rows(), "model: sigma_diag length != q");
    require((sigma_diag[j].array() > 0.0).all() && sigma_diag[j].allFinite(),
            "model: covariance diagonal must be positive");
  }
}

RescaledParameters to_rescaled(const MixtureRegressionModel& model) {
  RescaledParameters rp;
  rp.phi.reserve(model.K());
  rp.p_diag.reserve(model.K());
  for (int k = 0; k < model.K(); ++k) {
    Vector pd = model.sigma_diag[k].array().sqrt().inverse();
    rp.phi.push_back(pd.asDiagonal() * model.beta[k]);
    rp.p_diag.push_back(std::move(pd));
  }
  return rp;
}

MixtureRegressionModel from_rescaled(const Vector& pi, const RescaledParameters& rp) {
  MixtureRegressionModel model;
  model.pi = pi;
  model.beta.reserve(rp.phi.size());
  model.sigma_diag.reserve(rp.phi.size());
  for (std::size_t k = 0; k < rp.phi.size(); ++k) {
    const Vector& pd = rp.p_diag[k];
    model.beta.push_back(pd.cwiseInverse().asDiagonal() * rp.phi[k]);
    model.sigma_diag.push_back(pd.array().square().inverse());
  }
  return model;
}

void ModelIndex::validate(int p, int q) const {
  require(K >= 1, "index: K must be positive");
  require(!J.empty(), "index: J must be non-empty");
  require(std::is_sorted(J.begin(), J.end()) && std::adjacent_find(J.begin(), J.end()) == J.end(),
          "index: J must be sorted and duplicate-free");
  require(J.front() >= 0 && J.back() < p, "index: J out of range");
  require(static_cast<int>(R.size()) == K, "index: R length != K");
  const int cap = std::min(static_cast<int>(J.size()), q);
  for (int r : R) require(r >= 1 && r <= cap, "index: rank outside [1, min(|J|, q)]");
}

bool index_less(const ModelIndex& a, const ModelIndex& b) {
  if (a.K != b.K) return a.K < b.K;
  if (a.J != b.J) return a.J < b.J;
  return a.R < b.R;
}

long dimension(const ModelIndex& index, int q, DimensionMode mode) {
  const long Jsz = static_cast<long>(index.J.size());
  long d = 0;
  for (int r : index.R) d += static_cast<long>(r) * (Jsz + q - r);
  if (mode == DimensionMode::Full) d += (index.K - 1) + static_cast<long>(index.K) * q;
  return d;
}

void BoundsConfig::validate() const {
  require(a_sigma_sq > 0.0 && A_sigma_sq >= a_sigma_sq, "bounds: need 0 < a_sigma_sq <= A_sigma_sq");
  require(A_singular > 0.0, "bounds: A_singular must be positive");
}

}  // namespace rrmix
