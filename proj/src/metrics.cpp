#include "rrmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rrmix/density.hpp"
#include "rrmix/lasso_em.hpp"
#include "rrmix/rng.hpp"

namespace rrmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Per-row evaluation cache: component means at a fixed x plus the terms of the
// diagonal-Gaussian log density that do not depend on y.
struct RowDensity {
  std::vector<Vector> mu;
  std::vector<Vector> inv_var;
  Vector log_weight;

  RowDensity(const MixtureRegressionModel& m, const Vector& x) {
    const int K = m.K();
    const int q = m.q();
    mu.resize(K);
    inv_var.resize(K);
    log_weight.resize(K);
    for (int k = 0; k < K; ++k) {
      mu[k] = m.beta[k] * x;
      inv_var[k] = m.sigma_diag[k].cwiseInverse();
      log_weight[k] = std::log(m.pi[k]) - 0.5 * m.sigma_diag[k].array().log().sum() -
                      0.5 * q * kLog2Pi;
    }
  }

  double log_density(const Vector& y) const {
    const int K = static_cast<int>(log_weight.size());
    double best = -std::numeric_limits<double>::infinity();
    thread_local std::vector<double> terms;
    terms.resize(K);
    for (int k = 0; k < K; ++k) {
      const double quad = (y - mu[k]).array().square().matrix().dot(inv_var[k]);
      terms[k] = log_weight[k] - 0.5 * quad;
      best = std::max(best, terms[k]);
    }
    double acc = 0.0;
    for (int k = 0; k < K; ++k) acc += std::exp(terms[k] - best);
    return best + std::log(acc);
  }
};

double logsumexp2(double a, double b) {
  const double m = std::max(a, b);
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Shared Monte Carlo core for KL (rho <= 0) and JKL. Per-row derived seeds
// make kl_mc and jkl_mc pathwise comparable when called with the same config.
McEstimate mc_divergence(const MixtureRegressionModel& s_true,
                         const MixtureRegressionModel& s_hat, const Matrix& X_eval,
                         const JklConfig& cfg, double rho) {
  s_true.validate();
  s_hat.validate();
  if (s_true.p() != s_hat.p() || s_true.q() != s_hat.q())
    throw InvalidInput("divergence: models must share p and q");
  if (X_eval.rows() < 1 || X_eval.cols() != s_true.p())
    throw InvalidInput("divergence: evaluation design has wrong shape");
  cfg.validate();

  const int n = static_cast<int>(X_eval.rows());
  const int q = s_true.q();
  const int M = cfg.mc_samples;
  const double log_1m_rho = rho > 0.0 ? std::log1p(-rho) : 0.0;
  const double log_rho = rho > 0.0 ? std::log(rho) : 0.0;

  std::vector<Vector> sd_true(s_true.K());
  for (int k = 0; k < s_true.K(); ++k) sd_true[k] = s_true.sigma_diag[k].array().sqrt();

  double mean_acc = 0.0;
  double var_acc = 0.0;
  Vector y(q);
  for (int i = 0; i < n; ++i) {
    const Vector x = X_eval.row(i).transpose();
    const RowDensity true_eval(s_true, x);
    const RowDensity hat_eval(s_hat, x);
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    double sum = 0.0;
    double sumsq = 0.0;
    for (int m = 0; m < M; ++m) {
      const int k = rng.discrete(s_true.pi);
      for (int z = 0; z < q; ++z) y[z] = true_eval.mu[k][z] + sd_true[k][z] * rng.gaussian();
      const double d = hat_eval.log_density(y) - true_eval.log_density(y);
      const double value = rho > 0.0 ? -logsumexp2(log_1m_rho, log_rho + d) / rho : -d;
      sum += value;
      sumsq += value * value;
    }
    const double row_mean = sum / M;
    const double row_var = M > 1 ? std::max(0.0, (sumsq - sum * sum / M) / (M - 1)) : 0.0;
    mean_acc += row_mean;
    var_acc += row_var / M;
  }
  McEstimate out;
  out.value = mean_acc / n;
  out.std_error = std::sqrt(var_acc) / n;
  return out;
}

long pairs(long c) { return c * (c - 1) / 2; }

}  // namespace

void JklConfig::validate() const {
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidInput("jkl config: rho must lie in (0,1)");
  if (mc_samples < 1) throw InvalidInput("jkl config: mc_samples must be positive");
}

double hellinger_diag(const Vector& mu1, const Vector& sd1, const Vector& mu2,
                      const Vector& sd2) {
  const auto q = mu1.size();
  if (sd1.size() != q || mu2.size() != q || sd2.size() != q)
    throw InvalidInput("hellinger_diag: length mismatch");
  if (!(sd1.array() > 0.0).all() || !(sd2.array() > 0.0).all())
    throw InvalidInput("hellinger_diag: standard deviations must be positive");
  double log_bc = 0.0;
  for (Eigen::Index z = 0; z < q; ++z) {
    const double v = sd1[z] * sd1[z] + sd2[z] * sd2[z];
    log_bc += 0.5 * std::log(2.0 * sd1[z] * sd2[z] / v);
    const double dm = mu1[z] - mu2[z];
    log_bc -= 0.25 * dm * dm / v;
  }
  return 2.0 - 2.0 * std::exp(log_bc);
}

McEstimate kl_mc(const MixtureRegressionModel& s_true, const MixtureRegressionModel& s_hat,
                 const Matrix& X_eval, const JklConfig& cfg) {
  return mc_divergence(s_true, s_hat, X_eval, cfg, 0.0);
}

McEstimate jkl_mc(const MixtureRegressionModel& s_true, const MixtureRegressionModel& s_hat,
                  const Matrix& X_eval, const JklConfig& cfg) {
  return mc_divergence(s_true, s_hat, X_eval, cfg, cfg.rho);
}

std::pair<int, int> support_errors(const std::vector<int>& J_hat, const std::vector<int>& J_true) {
  std::vector<int> hat = J_hat, tru = J_true;
  std::sort(hat.begin(), hat.end());
  std::sort(tru.begin(), tru.end());
  std::vector<int> missed, extra;
  std::set_difference(tru.begin(), tru.end(), hat.begin(), hat.end(), std::back_inserter(missed));
  std::set_difference(hat.begin(), hat.end(), tru.begin(), tru.end(), std::back_inserter(extra));
  return {static_cast<int>(missed.size()), static_cast<int>(extra.size())};
}

double ari(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size() || labels_a.empty())
    throw InvalidInput("ari: labelings must be non-empty and of equal length");
  std::map<std::pair<int, int>, long> joint;
  std::map<int, long> count_a, count_b;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    ++joint[{labels_a[i], labels_b[i]}];
    ++count_a[labels_a[i]];
    ++count_b[labels_b[i]];
  }
  double idx = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, c] : joint) idx += static_cast<double>(pairs(c));
  for (const auto& [key, c] : count_a) sum_a += static_cast<double>(pairs(c));
  for (const auto& [key, c] : count_b) sum_b += static_cast<double>(pairs(c));
  const double total = static_cast<double>(pairs(static_cast<long>(labels_a.size())));
  if (total == 0.0) return 1.0;
  const double expected = sum_a * sum_b / total;
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return 1.0;
  return (idx - expected) / (maximum - expected);
}

double mse(const MixtureRegressionModel& model, const Dataset& test) {
  model.validate();
  test.validate();
  if (test.p() != model.p() || test.q() != model.q())
    throw InvalidInput("mse: dimension mismatch");
  const Matrix gamma = estep(model, test).gamma;
  double acc = 0.0;
  for (int i = 0; i < test.n(); ++i) {
    int k = 0;
    for (int c = 1; c < model.K(); ++c)
      if (gamma(i, c) > gamma(i, k)) k = c;
    const Vector resid =
        test.Y.row(i).transpose() - model.beta[k] * test.X.row(i).transpose();
    acc += resid.squaredNorm() / test.q();
  }
  return acc / test.n();
}

}  // namespace rrmix
