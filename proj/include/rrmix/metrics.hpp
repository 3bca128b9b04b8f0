#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rrmix/types.hpp"

namespace rrmix {

struct JklConfig {
  double rho = 0.5;         // JKL weight, in (0,1)
  int mc_samples = 10000;   // draws per evaluation row
  std::uint64_t seed = 0;

  void validate() const;
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Squared Hellinger distance between two diagonal Gaussians, normalized so
// the maximum is 2 (the integral of (sqrt f - sqrt g)^2). sd1/sd2 are
// standard deviations.
double hellinger_diag(const Vector& mu1, const Vector& sd1, const Vector& mu2, const Vector& sd2);

// Monte Carlo tensorized KL: mean over rows of X_eval of
// E_{y ~ s_true(.|x)} log(s_true/s_hat), with per-row derived seeds.
McEstimate kl_mc(const MixtureRegressionModel& s_true, const MixtureRegressionModel& s_hat,
                 const Matrix& X_eval, const JklConfig& cfg);

// Tensorized Jensen-Kullback-Leibler divergence (1/rho) KL(s, (1-rho)s + rho t),
// same sampler as kl_mc so paired seeds give pathwise JKL <= KL.
McEstimate jkl_mc(const MixtureRegressionModel& s_true, const MixtureRegressionModel& s_hat,
                  const Matrix& X_eval, const JklConfig& cfg);

// (misses, false actives) = (|J_true \ J_hat|, |J_hat \ J_true|), as counts.
std::pair<int, int> support_errors(const std::vector<int>& J_hat, const std::vector<int>& J_true);

// Adjusted Rand index between two labelings; 1 for identical partitions up to
// relabeling, defined as 1 when both expected and maximum agreement coincide.
double ari(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

// Mean over test rows of ||y_i - beta_{k(i)} x_i||^2 / q, k(i) the MAP component.
double mse(const MixtureRegressionModel& model, const Dataset& test);

// Table-style evaluation summary.
struct EvalReport {
  double kl_mean = 0.0;
  double kl_se = 0.0;
  std::vector<double> rank_median;
  double misses = 0.0;
  double false_actives = 0.0;
  double ari = 0.0;
  double mse = 0.0;
};

}  // namespace rrmix
