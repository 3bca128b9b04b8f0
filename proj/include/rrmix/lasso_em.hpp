#pragma once

#include <cstdint>
#include <vector>

#include "rrmix/types.hpp"

namespace rrmix {

// Posterior cluster-membership weights gamma_ik, rows sum to 1.
struct Responsibilities {
  Matrix gamma;  // n x K
};

// One block update of the penalized EM surrogate, recorded when a fit runs
// instrumented. q_after <= q_before (+1e-9) is the descent property under test.
struct DescentEvent {
  int iteration;
  const char* block;  // "pi", "phi", "p"
  double q_before;
  double q_after;
};

struct LassoFitConfig {
  double lambda = 0.0;
  int max_iter = 200;
  double rel_tol = 1e-6;
  int n_restarts = 5;
  std::uint64_t seed = 0;

  // Column j is declared active when max_k ||phi_k col j||_inf exceeds this.
  double support_eps = 1e-7;
  // Minimum responsibility mass per cluster before a restart is declared collapsed.
  double cluster_floor = 1.0;
  double var_floor = 1e-8;

  // Instrumentation sinks, optional. When set, the fit records the surrogate
  // around every M-step block / the penalized objective after every iteration.
  std::vector<DescentEvent>* descent_log = nullptr;
  std::vector<double>* objective_trace = nullptr;

  void validate() const;
};

// Output of one penalized fit: the zero pattern, the refit model and the
// penalized objective value it attained.
struct SupportResult {
  double lambda = 0.0;
  std::vector<int> J;  // sorted zero-based active columns
  MixtureRegressionModel model;
  Responsibilities gamma;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
};

// E-step: row-stochastic posterior weights computed in the log domain.
Responsibilities estep(const MixtureRegressionModel& model, const Dataset& data);

// Generalized EM for the mixture-weighted l1 criterion
//   -(1/n) loglik + lambda * sum_k pi_k ||phi_k||_1,
// blockwise M-step (pi, coordinate-wise soft-thresholded phi, closed-form p).
// Returns the best fit over n_restarts initializations.
SupportResult lasso_em_fit(const Dataset& data, int K, const LassoFitConfig& cfg);

// Same EM from caller-supplied responsibilities (single run, no restarts).
SupportResult lasso_em_fit_with_init(const Dataset& data, int K, const LassoFitConfig& cfg,
                                     const Responsibilities& init);

// Data-driven regularization grid: G log-spaced values on
// [1e-3 * lambda_max, lambda_max], where lambda_max is the smallest lambda
// that keeps every phi coordinate at zero from the null-model initializations.
std::vector<double> lambda_grid(const Dataset& data, int K, int G,
                                const LassoFitConfig& cfg = LassoFitConfig{});

// Active columns of a rescaled parameter set (see LassoFitConfig::support_eps).
std::vector<int> active_columns(const std::vector<Matrix>& phi, double support_eps);

// Penalized EM surrogate at fixed responsibilities; exposed for the
// instrumentation tests.
double penalized_surrogate(const Dataset& data, const Matrix& gamma, const Vector& pi,
                           const std::vector<Matrix>& phi, const std::vector<Vector>& p_diag,
                           double lambda);

}  // namespace rrmix
