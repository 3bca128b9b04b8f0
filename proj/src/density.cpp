#include "rrmix/density.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rrmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// log pi_k + log N_q(y; beta_k x, Sigma_k) for every component.
void component_log_terms(const MixtureRegressionModel& model, const Eigen::Ref<const Vector>& x,
                         const Eigen::Ref<const Vector>& y, std::vector<double>& out) {
  const int K = model.K();
  const int q = model.q();
  out.resize(K);
  for (int k = 0; k < K; ++k) {
    const Vector mean = model.beta[k] * x;
    double quad = 0.0;
    double logdet = 0.0;
    for (int z = 0; z < q; ++z) {
      const double d = y[z] - mean[z];
      quad += d * d / model.sigma_diag[k][z];
      logdet += std::log(model.sigma_diag[k][z]);
    }
    out[k] = std::log(model.pi[k]) - 0.5 * (q * kLog2Pi + logdet + quad);
  }
}

// log-sum-exp over terms summed in ascending order, so the result does not
// depend on the component ordering.
double logsumexp_sorted(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  const double m = terms.back();
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - m);
  return m + std::log(acc);
}

}  // namespace

double log_mixture_density(const MixtureRegressionModel& model, const Eigen::Ref<const Vector>& x,
                           const Eigen::Ref<const Vector>& y) {
  if (!x.allFinite() || !y.allFinite()) throw InvalidInput("mixture_density: non-finite input");
  if (x.size() != model.p() || y.size() != model.q())
    throw InvalidInput("mixture_density: dimension mismatch");
  std::vector<double> terms;
  component_log_terms(model, x, y, terms);
  return logsumexp_sorted(terms);
}

double mixture_density(const MixtureRegressionModel& model, const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& y) {
  return std::exp(log_mixture_density(model, x, y));
}

double log_likelihood(const MixtureRegressionModel& model, const Dataset& data) {
  if (data.p() != model.p() || data.q() != model.q())
    throw InvalidInput("log_likelihood: dimension mismatch");
  double total = 0.0;
  for (int i = 0; i < data.n(); ++i)
    total += log_mixture_density(model, data.X.row(i).transpose(), data.Y.row(i).transpose());
  return total;
}

}  // namespace rrmix
