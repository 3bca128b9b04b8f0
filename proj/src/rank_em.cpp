#include "rrmix/rank_em.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rrmix/density.hpp"

namespace rrmix {

namespace {

// Squared distances from standardized (x, y) rows to the centroid of the rows
// flagged in `members`; used to pick re-seed points for emptied clusters.
Vector distances_to_member_centroid(const Matrix& Z, const std::vector<int>& labels, int cluster) {
  Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(Z.cols());
  int count = 0;
  for (int i = 0; i < Z.rows(); ++i)
    if (labels[i] == cluster) {
      centroid += Z.row(i);
      ++count;
    }
  if (count > 0) centroid /= count;
  return (Z.rowwise() - centroid).rowwise().squaredNorm();
}

Matrix standardized_features(const Dataset& data) {
  const int n = data.n();
  Matrix Z(n, data.X.cols() + data.Y.cols());
  Z << data.X, data.Y;
  for (int j = 0; j < Z.cols(); ++j) {
    const double mean = Z.col(j).mean();
    Z.col(j).array() -= mean;
    const double sd = n > 1 ? std::sqrt(Z.col(j).squaredNorm() / (n - 1)) : 0.0;
    if (sd > 0.0)
      Z.col(j) /= sd;
    else
      Z.col(j).setZero();
  }
  return Z;
}

std::vector<int> map_labels(const Matrix& gamma) {
  std::vector<int> labels(gamma.rows());
  for (int i = 0; i < gamma.rows(); ++i) {
    int best = 0;
    for (int k = 1; k < gamma.cols(); ++k)
      if (gamma(i, k) > gamma(i, best)) best = k;
    labels[i] = best;
  }
  return labels;
}

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

void RankFitConfig::validate(int J_size, int q) const {
  if (R.empty()) throw InvalidInput("rank config: R must be non-empty");
  const int cap = std::min(J_size, q);
  for (int r : R)
    if (r < 1 || r > cap) throw InvalidInput("rank config: ranks must lie in [1, min(|J|, q)]");
  if (max_iter < 1) throw InvalidInput("rank config: max_iter must be >= 1");
  if (rel_tol < 0.0) throw InvalidInput("rank config: rel_tol must be >= 0");
}

Matrix ols_fit(const Matrix& Xs, const Matrix& Ys, bool* rank_deficient) {
  if (Xs.rows() < 1 || Xs.cols() < 1) throw InvalidInput("ols_fit: empty design");
  if (Xs.rows() != Ys.rows()) throw InvalidInput("ols_fit: row count mismatch");
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Xs);
  if (rank_deficient) *rank_deficient = cod.rank() < Xs.cols();
  return cod.solve(Ys).transpose();
}

Matrix rank_truncate(const Matrix& B, int r) {
  const int full = static_cast<int>(std::min(B.rows(), B.cols()));
  if (r < 1 || r > full) throw InvalidInput("rank_truncate: rank outside [1, min(q,d)]");
  if (r == full) return B;
  Eigen::JacobiSVD<Matrix> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

FittedModel rank_em_fit(const Dataset& data, const std::vector<int>& J, int K,
                        const RankFitConfig& cfg, const Responsibilities& init) {
  data.validate();
  if (J.empty()) throw InvalidInput("rank_em_fit: J must be non-empty");
  if (!std::is_sorted(J.begin(), J.end()) || J.front() < 0 || J.back() >= data.p())
    throw InvalidInput("rank_em_fit: J must be sorted and within [0, p)");
  if (static_cast<int>(cfg.R.size()) != K) throw InvalidInput("rank_em_fit: |R| != K");
  cfg.validate(static_cast<int>(J.size()), data.q());
  if (init.gamma.rows() != data.n() || init.gamma.cols() != K)
    throw InvalidInput("rank_em_fit: init responsibilities have wrong shape");

  const int n = data.n();
  const int q = data.q();
  const int d = static_cast<int>(J.size());

  Dataset ds;
  ds.X.resize(n, d);
  for (int j = 0; j < d; ++j) ds.X.col(j) = data.X.col(J[j]);
  ds.Y = data.Y;

  // Column scales of the restricted design; the SVD truncation operates on
  // beta expressed over standardized columns.
  Vector col_scale(d);
  for (int j = 0; j < d; ++j) {
    const double mean = ds.X.col(j).mean();
    const double sd =
        n > 1 ? std::sqrt((ds.X.col(j).array() - mean).square().sum() / (n - 1)) : 0.0;
    col_scale[j] = sd > 0.0 ? sd : 1.0;
  }

  const Matrix Z = standardized_features(ds);

  MixtureRegressionModel model;
  model.pi = Vector::Constant(K, 1.0 / K);
  model.beta.assign(K, Matrix::Zero(q, d));
  model.sigma_diag.assign(K, Vector::Constant(q, 1.0));

  std::vector<int> labels = map_labels(init.gamma);

  MixtureRegressionModel best_model = model;
  double best_loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int reseeds = 0;
  double prev_loglik = -std::numeric_limits<double>::infinity();
  int iter = 0;

  for (iter = 1; iter <= cfg.max_iter; ++iter) {
    if (iter > 1) labels = map_labels(estep(model, ds).gamma);

    // re-seed emptied clusters from the largest cluster's farthest points
    for (int k = 0; k < K; ++k) {
      std::vector<int> counts(K, 0);
      for (int lab : labels) ++counts[lab];
      if (counts[k] > 0) continue;
      if (++reseeds > 3 * K)
        throw DegenerateFit("rank_em_fit: repeated cluster collapse");
      const int largest =
          static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      const int take = std::min(counts[largest] - 1, std::max(2, cfg.R[k] + 1));
      if (take < 1) throw DegenerateFit("rank_em_fit: cluster collapse with no donor points");
      const Vector dist = distances_to_member_centroid(Z, labels, largest);
      std::vector<int> members;
      for (int i = 0; i < n; ++i)
        if (labels[i] == largest) members.push_back(i);
      std::sort(members.begin(), members.end(), [&](int a, int b) {
        if (dist[a] != dist[b]) return dist[a] > dist[b];
        return a < b;
      });
      for (int t = 0; t < take; ++t) labels[members[t]] = k;
    }

    const MixtureRegressionModel old_model = model;

    // per-cluster OLS + truncation to R(k), then refit pi and sigma
    for (int k = 0; k < K; ++k) {
      std::vector<int> rows;
      for (int i = 0; i < n; ++i)
        if (labels[i] == k) rows.push_back(i);
      const int m = static_cast<int>(rows.size());
      Matrix Xk(m, d), Yk(m, q);
      for (int t = 0; t < m; ++t) {
        Xk.row(t) = ds.X.row(rows[t]);
        Yk.row(t) = ds.Y.row(rows[t]);
      }
      Matrix beta = ols_fit(Xk, Yk);
      const int full = std::min(d, q);
      if (cfg.R[k] < full) {
        Matrix scaled = beta * col_scale.asDiagonal();
        scaled = rank_truncate(scaled, cfg.R[k]);
        beta = scaled * col_scale.cwiseInverse().asDiagonal();
      }
      model.beta[k] = beta;
      model.pi[k] = static_cast<double>(m) / n;
      const Matrix resid = Yk - Xk * beta.transpose();
      for (int z = 0; z < q; ++z)
        model.sigma_diag[k][z] = std::max(resid.col(z).squaredNorm() / m, cfg.var_floor);
    }
    model.pi /= model.pi.sum();

    const double loglik = log_likelihood(model, ds);
    if (loglik > best_loglik) {
      best_loglik = loglik;
      best_model = model;
    }

    double par_change = (model.pi - old_model.pi).cwiseAbs().maxCoeff();
    for (int k = 0; k < K; ++k) {
      par_change = std::max(par_change, max_abs_diff(model.beta[k], old_model.beta[k]) /
                                            (1.0 + old_model.beta[k].cwiseAbs().maxCoeff()));
      par_change = std::max(par_change, max_abs_diff(model.sigma_diag[k], old_model.sigma_diag[k]) /
                                            (1.0 + old_model.sigma_diag[k].cwiseAbs().maxCoeff()));
    }
    const double ll_change = std::abs(loglik - prev_loglik) / (1.0 + std::abs(prev_loglik));
    prev_loglik = loglik;
    if (iter > 1 && par_change < cfg.rel_tol && ll_change < cfg.rel_tol) {
      converged = true;
      break;
    }
  }

  FittedModel out;
  out.index.K = K;
  out.index.J = J;
  out.index.R = cfg.R;
  out.index.validate(data.p(), q);
  out.model.pi = best_model.pi;
  out.model.beta.assign(K, Matrix::Zero(q, data.p()));
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < d; ++j) out.model.beta[k].col(J[j]) = best_model.beta[k].col(j);
  out.model.sigma_diag = best_model.sigma_diag;
  out.loglik = log_likelihood(out.model, data);
  out.dim_means = dimension(out.index, q, DimensionMode::MeansOnly);
  out.dim_full = dimension(out.index, q, DimensionMode::Full);
  out.converged = converged;
  out.iterations = std::min(iter, cfg.max_iter);
  return out;
}

}  // namespace rrmix
