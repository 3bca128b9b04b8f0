#pragma once

#include <cstdint>
#include <vector>

#include "rrmix/lasso_em.hpp"
#include "rrmix/types.hpp"

namespace rrmix {

struct RankFitConfig {
  std::vector<int> R;  // target rank per cluster
  int max_iter = 200;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
  double var_floor = 1e-8;

  void validate(int J_size, int q) const;
};

// A fitted member of the model collection: index, parameters (beta_k zero
// outside J, rank <= R(k) on J), its training log-likelihood and dimensions.
struct FittedModel {
  ModelIndex index;
  MixtureRegressionModel model;
  double loglik = 0.0;
  long dim_means = 0;
  long dim_full = 0;
  bool converged = false;
  int iterations = 0;
};

// Minimum-Frobenius-norm least squares of Ys on Xs, returned in the q x d
// convention (so fitted values are Xs * result^T). rank_deficient, when
// non-null, reports whether Xs had column rank < d.
Matrix ols_fit(const Matrix& Xs, const Matrix& Ys, bool* rank_deficient = nullptr);

// Best rank-r approximation: SVD with all but the r largest singular values
// zeroed. r >= min(q,d) returns B unchanged.
Matrix rank_truncate(const Matrix& B, int r);

// Second generalized EM: on X restricted to columns J, alternate E-step, MAP
// assignment, per-cluster OLS, singular-value truncation to R(k), and refit of
// proportions and diagonal covariances. Returns the best-log-likelihood
// iterate (hard-assignment EM with truncation is not monotone).
FittedModel rank_em_fit(const Dataset& data, const std::vector<int>& J, int K,
                        const RankFitConfig& cfg, const Responsibilities& init);

}  // namespace rrmix
