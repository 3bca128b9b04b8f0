#include "rrmix/simgen.hpp"

#include <cmath>

#include "rrmix/rng.hpp"

namespace rrmix {

namespace {

Matrix draw_matrix(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
  return m;
}

Dataset draw_dataset(Rng& rng, const MixtureRegressionModel& truth, const Vector& pi, int n,
                     double rho) {
  const int p = truth.p();
  const int q = truth.q();
  const double x_sd = std::sqrt(rho);
  Dataset ds;
  ds.X.resize(n, p);
  ds.Y.resize(n, q);
  ds.true_labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int k = rng.discrete(pi);
    ds.true_labels[i] = k;
    for (int j = 0; j < p; ++j) ds.X(i, j) = x_sd * rng.gaussian();
    const Vector mean = truth.beta[k] * ds.X.row(i).transpose();
    for (int z = 0; z < q; ++z) ds.Y(i, z) = mean[z] + rng.gaussian();
  }
  return ds;
}

}  // namespace

void SimConfig::validate() const {
  if (n < 1 || p < 1 || q < 1) throw InvalidInput("sim config: n, p, q must be positive");
  if (J_size < 1 || J_size > p) throw InvalidInput("sim config: J_size must lie in [1, p]");
  if (K < 1) throw InvalidInput("sim config: K must be positive");
  if (static_cast<int>(R.size()) != K) throw InvalidInput("sim config: |R| != K");
  for (int r : R)
    if (r < 1 || r > std::min(J_size, q))
      throw InvalidInput("sim config: ranks must lie in [1, min(J_size, q)]");
  if (!(rho > 0.0)) throw InvalidInput("sim config: rho must be positive");
  if (static_cast<int>(b.size()) != K) throw InvalidInput("sim config: |b| != K");
  if (!pi.empty()) {
    if (static_cast<int>(pi.size()) != K) throw InvalidInput("sim config: |pi| != K");
    double s = 0.0;
    for (double v : pi) {
      if (!(v > 0.0)) throw InvalidInput("sim config: proportions must be positive");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw InvalidInput("sim config: proportions must sum to 1");
  }
}

SimData generate(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  Vector pi(cfg.K);
  if (cfg.pi.empty())
    pi.setConstant(1.0 / cfg.K);
  else
    for (int k = 0; k < cfg.K; ++k) pi[k] = cfg.pi[k];

  MixtureRegressionModel truth;
  truth.pi = pi;
  truth.beta.assign(cfg.K, Matrix::Zero(cfg.q, cfg.p));
  truth.sigma_diag.assign(cfg.K, Vector::Ones(cfg.q));
  for (int k = 0; k < cfg.K; ++k) {
    const Matrix B0 = draw_matrix(rng, cfg.J_size, cfg.R[k]);
    const Matrix B1 = draw_matrix(rng, cfg.R[k], cfg.q);
    // active block is b_k * (B0 B1)^T, a q x J_size matrix of rank R(k)
    truth.beta[k].leftCols(cfg.J_size) = cfg.b[k] * (B0 * B1).transpose();
  }

  SimData out;
  out.train = draw_dataset(rng, truth, pi, cfg.n, cfg.rho);
  out.test = draw_dataset(rng, truth, pi, cfg.n_test < 0 ? cfg.n : cfg.n_test, cfg.rho);
  out.truth.model = std::move(truth);
  out.truth.J.resize(cfg.J_size);
  for (int j = 0; j < cfg.J_size; ++j) out.truth.J[j] = j;
  out.truth.R = cfg.R;
  return out;
}

SimConfig setting_p_gt_n() {
  SimConfig cfg;
  cfg.n = 50;
  cfg.p = 100;
  cfg.q = 10;
  cfg.J_size = 6;
  cfg.R = {3, 3};
  cfg.rho = 0.1;
  cfg.b = {3.0, -3.0};
  return cfg;
}

SimConfig setting_p_lt_n() {
  SimConfig cfg;
  cfg.n = 200;
  cfg.p = 10;
  cfg.q = 10;
  cfg.J_size = 6;
  cfg.R = {3, 3};
  cfg.rho = 0.01;
  cfg.b = {3.0, -3.0};
  return cfg;
}

}  // namespace rrmix
