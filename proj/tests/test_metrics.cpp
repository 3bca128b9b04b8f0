#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "rrmix/metrics.hpp"
#include "rrmix/rng.hpp"
#include "rrmix/types.hpp"

using namespace rrmix;

namespace {

// adaptive Simpson quadrature
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fb, double fm, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, fm, flm, left, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, fb, frm, right, tol / 2, depth - 1);
}

// panelized so narrow bumps between far-apart means are not missed
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-11) {
  const int panels = 512;
  double total = 0.0;
  for (int s = 0; s < panels; ++s) {
    const double lo = a + (b - a) * s / panels;
    const double hi = a + (b - a) * (s + 1) / panels;
    const double m = 0.5 * (lo + hi);
    const double fa = f(lo), fb = f(hi), fm = f(m);
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    total += adaptive_simpson(f, lo, hi, fa, fb, fm, whole, tol, 30);
  }
  return total;
}

double normal_pdf(double y, double mu, double sd) {
  const double z = (y - mu) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
}

// quadrature oracle: 2 - 2 prod_z integral of sqrt(f_z g_z)
double hellinger_quadrature(const Vector& mu1, const Vector& sd1, const Vector& mu2,
                            const Vector& sd2) {
  double bc = 1.0;
  for (int z = 0; z < mu1.size(); ++z) {
    const double lo = std::min(mu1[z], mu2[z]) - 12.0 * std::max(sd1[z], sd2[z]);
    const double hi = std::max(mu1[z], mu2[z]) + 12.0 * std::max(sd1[z], sd2[z]);
    bc *= integrate(
        [&](double y) {
          return std::sqrt(normal_pdf(y, mu1[z], sd1[z]) * normal_pdf(y, mu2[z], sd2[z]));
        },
        lo, hi);
  }
  return 2.0 - 2.0 * bc;
}

MixtureRegressionModel diag_gaussian_model(const Vector& shift, const Vector& var, int p) {
  MixtureRegressionModel m;
  m.pi = Vector::Ones(1);
  Matrix beta = Matrix::Zero(shift.size(), p);
  beta.col(0) = shift;  // mean = shift * x_1
  m.beta = {beta};
  m.sigma_diag = {var};
  return m;
}

double closed_form_kl(const Vector& mu1, const Vector& var1, const Vector& mu2,
                      const Vector& var2) {
  double kl = 0.0;
  for (int z = 0; z < mu1.size(); ++z) {
    const double d = mu2[z] - mu1[z];
    kl += 0.5 * (var1[z] / var2[z] + d * d / var2[z] - 1.0 + std::log(var2[z] / var1[z]));
  }
  return kl;
}

}  // namespace

TEST_CASE("hellinger distance trivia") {
  Vector mu(2), sd(2);
  mu << 0.3, -1.0;
  sd << 1.0, 0.7;
  CHECK(std::abs(hellinger_diag(mu, sd, mu, sd)) < 1e-14);

  Vector m1(1), s1(1), m2(1), s2(1);
  m1 << 0.0;
  m2 << 0.0;
  s1 << 1.0;
  s2 << 2.0;  // variances 1 and 4
  CHECK(hellinger_diag(m1, s1, m2, s2) ==
        doctest::Approx(2.0 - 2.0 * std::sqrt(4.0 / 5.0)).epsilon(1e-14));
}

TEST_CASE("hellinger distance matches quadrature, is symmetric and bounded") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const int q = 1 + rng.uniform_int(2);
    Vector mu1(q), mu2(q), sd1(q), sd2(q);
    for (int z = 0; z < q; ++z) {
      mu1[z] = 3.0 * rng.gaussian();
      mu2[z] = 3.0 * rng.gaussian();
      sd1[z] = 0.3 + 2.0 * rng.uniform01();
      sd2[z] = 0.3 + 2.0 * rng.uniform01();
    }
    const double value = hellinger_diag(mu1, sd1, mu2, sd2);
    CHECK(std::abs(value - hellinger_quadrature(mu1, sd1, mu2, sd2)) < 1e-6);
    CHECK(std::abs(value - hellinger_diag(mu2, sd2, mu1, sd1)) < 1e-14);
    CHECK(value >= 0.0);
    CHECK(value <= 2.0);
  }
}

TEST_CASE("kl estimate vanishes on identical models") {
  Rng rng(7);
  Vector shift(2), var(2);
  shift << 1.0, -2.0;
  var << 0.8, 1.4;
  const MixtureRegressionModel m = diag_gaussian_model(shift, var, 2);
  Matrix X = Matrix::Random(5, 2);
  JklConfig cfg;
  cfg.mc_samples = 4000;
  cfg.seed = 1;
  const McEstimate est = kl_mc(m, m, X, cfg);
  CHECK(std::abs(est.value) <= 3.0 * est.std_error + 1e-12);
}

TEST_CASE("kl estimate matches the closed form for single Gaussians") {
  Rng rng(11);
  for (int t = 0; t < 6; ++t) {
    Vector shift1(2), shift2(2), var1(2), var2(2);
    for (int z = 0; z < 2; ++z) {
      shift1[z] = rng.gaussian();
      shift2[z] = shift1[z] + 0.5 * rng.gaussian();
      var1[z] = 0.5 + rng.uniform01();
      var2[z] = 0.5 + rng.uniform01();
    }
    const MixtureRegressionModel a = diag_gaussian_model(shift1, var1, 1);
    const MixtureRegressionModel b = diag_gaussian_model(shift2, var2, 1);
    Matrix X(3, 1);
    X << 0.5, 1.0, -1.5;
    JklConfig cfg;
    cfg.mc_samples = 20000;
    cfg.seed = 100 + t;
    const McEstimate est = kl_mc(a, b, X, cfg);
    double expected = 0.0;
    for (int i = 0; i < X.rows(); ++i)
      expected += closed_form_kl(shift1 * X(i, 0), var1, shift2 * X(i, 0), var2) / X.rows();
    CHECK(std::abs(est.value - expected) <= 3.0 * est.std_error);
    CHECK(est.value >= -3.0 * est.std_error);
  }
}

TEST_CASE("kl increases when a mean offset doubles") {
  Vector var = Vector::Ones(1);
  const MixtureRegressionModel base = diag_gaussian_model(Vector::Zero(1), var, 1);
  Matrix X = Matrix::Ones(2, 1);
  JklConfig cfg;
  cfg.mc_samples = 100000;
  cfg.seed = 5;
  Vector off1(1), off2(1);
  off1 << 1.0;
  off2 << 2.0;
  const double kl1 = kl_mc(base, diag_gaussian_model(off1, var, 1), X, cfg).value;
  const double kl2 = kl_mc(base, diag_gaussian_model(off2, var, 1), X, cfg).value;
  CHECK(kl1 < kl2);
}

TEST_CASE("jkl is bounded, vanishes at identity and never exceeds kl pathwise") {
  Vector var = Vector::Ones(2);
  Vector zero = Vector::Zero(2);
  const MixtureRegressionModel truth = diag_gaussian_model(zero, var, 1);
  Matrix X = Matrix::Ones(4, 1);
  JklConfig cfg;
  cfg.rho = 0.5;
  cfg.mc_samples = 5000;
  cfg.seed = 17;

  const McEstimate same = jkl_mc(truth, truth, X, cfg);
  CHECK(std::abs(same.value) <= 3.0 * same.std_error + 1e-12);

  // mean gap of 1000 sigma: closed-form KL ~ 1e6 nats but JKL stays bounded
  Vector huge(2);
  huge << 1000.0, 1000.0;
  const MixtureRegressionModel far = diag_gaussian_model(huge, var, 1);
  const double bound = std::log(1.0 / (1.0 - cfg.rho)) / cfg.rho;
  const McEstimate far_est = jkl_mc(truth, far, X, cfg);
  CHECK(far_est.value <= bound + 3.0 * far_est.std_error + 1e-12);
  CHECK(far_est.value == doctest::Approx(bound).epsilon(1e-6));

  Rng rng(23);
  for (int t = 0; t < 5; ++t) {
    Vector shift(2);
    shift << rng.gaussian(), rng.gaussian();
    const MixtureRegressionModel other = diag_gaussian_model(shift, var, 1);
    JklConfig paired = cfg;
    paired.seed = 400 + t;
    const McEstimate kl = kl_mc(truth, other, X, paired);
    const McEstimate jkl = jkl_mc(truth, other, X, paired);
    CHECK(jkl.value <= kl.value + 1e-12);  // same draws
    CHECK(jkl.value <= bound + 3.0 * jkl.std_error + 1e-12);
  }
}

TEST_CASE("support errors") {
  CHECK(support_errors({1, 2, 3}, {1, 2, 3}) == std::pair<int, int>{0, 0});
  std::vector<int> truth{0, 1, 2, 3, 4, 5};
  std::vector<int> hat = truth;
  for (int j = 6; j < 26; ++j) hat.push_back(j);
  CHECK(support_errors(hat, truth) == std::pair<int, int>{0, 20});
  CHECK(support_errors({}, truth) == std::pair<int, int>{6, 0});
}

TEST_CASE("ari agrees with brute-force pair counting") {
  CHECK(ari({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0));
  CHECK(ari({0, 0, 1, 1}, {5, 5, 2, 2}) == doctest::Approx(1.0));  // relabeled

  Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    std::vector<int> a(8), b(8);
    for (int i = 0; i < 8; ++i) {
      a[i] = rng.uniform_int(2);
      b[i] = rng.uniform_int(2);
    }
    double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
    for (int i = 0; i < 8; ++i)
      for (int j = i + 1; j < 8; ++j) {
        const bool same_a = a[i] == a[j], same_b = b[i] == b[j];
        if (same_a && same_b)
          ++n11;
        else if (same_a)
          ++n10;
        else if (same_b)
          ++n01;
        else
          ++n00;
      }
    const double denom = (n11 + n10) * (n10 + n00) + (n11 + n01) * (n01 + n00);
    const double expected = denom == 0.0 ? 1.0 : 2.0 * (n11 * n00 - n10 * n01) / denom;
    CHECK(ari(a, b) == doctest::Approx(expected).epsilon(1e-12));
  }

  // exact invariance under label permutation
  std::vector<int> a{0, 1, 2, 0, 1, 2, 0, 0};
  std::vector<int> b{1, 1, 0, 2, 2, 0, 1, 2};
  std::vector<int> b_renamed{2, 2, 1, 0, 0, 1, 2, 0};
  CHECK(ari(a, b) == ari(a, b_renamed));
}

TEST_CASE("mse basics") {
  // exact fit on noiseless data
  MixtureRegressionModel m;
  m.pi = Vector::Ones(1);
  Matrix beta(2, 2);
  beta << 1.0, -2.0, 0.5, 3.0;
  m.beta = {beta};
  m.sigma_diag = {Vector::Ones(2)};
  Dataset ds;
  ds.X = Matrix::Random(12, 2);
  ds.Y = ds.X * beta.transpose();
  CHECK(mse(m, ds) == doctest::Approx(0.0));

  // duplicating the test set leaves the value unchanged
  Dataset doubled;
  doubled.X.resize(24, 2);
  doubled.Y.resize(24, 2);
  doubled.X << ds.X, ds.X;
  doubled.Y << ds.Y, ds.Y;
  Dataset noisy = ds;
  noisy.Y.array() += 0.3;
  Dataset noisy2;
  noisy2.X.resize(24, 2);
  noisy2.Y.resize(24, 2);
  noisy2.X << noisy.X, noisy.X;
  noisy2.Y << noisy.Y, noisy.Y;
  CHECK(mse(m, noisy2) == doctest::Approx(mse(m, noisy)).epsilon(1e-14));

  // pure-noise single-cluster data estimates the noise variance
  Rng rng(41);
  MixtureRegressionModel null_model;
  null_model.pi = Vector::Ones(1);
  null_model.beta = {Matrix::Zero(2, 2)};
  null_model.sigma_diag = {Vector::Ones(2)};
  Dataset noise;
  noise.X.resize(10000, 2);
  noise.Y.resize(10000, 2);
  for (int i = 0; i < 10000; ++i) {
    for (int j = 0; j < 2; ++j) noise.X(i, j) = rng.gaussian();
    for (int z = 0; z < 2; ++z) noise.Y(i, z) = 1.3 * rng.gaussian();
  }
  CHECK(mse(null_model, noise) == doctest::Approx(1.69).epsilon(0.10));
}

TEST_CASE("config validation") {
  JklConfig cfg;
  cfg.rho = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg.rho = 0.5;
  cfg.mc_samples = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  CHECK_THROWS_AS(ari({0, 1}, {0}), InvalidInput);
  Vector mu(1), sd(1);
  mu << 0.0;
  sd << 0.0;
  CHECK_THROWS_AS(hellinger_diag(mu, sd, mu, sd), InvalidInput);
}
