#include "rrmix/lasso_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rrmix/density.hpp"
#include "rrmix/rng.hpp"

namespace rrmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kPFloor = 1e-6;  // p_diag range, i.e. variances in [1e-8, 1e12]
constexpr double kPCap = 1e4;

struct EmState {
  Vector pi;                   // K
  std::vector<Matrix> phi;     // K of q x p
  std::vector<Vector> p_diag;  // K of q
  Matrix gamma;                // n x K
};

// Column-standardized [X | Y], zero for constant columns.
Matrix standardized_features(const Dataset& data) {
  const int n = data.n();
  Matrix Z(n, data.p() + data.q());
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

// k-means++ seeding plus Lloyd iterations on standardized (x, y) rows;
// returns one-hot responsibilities.
Matrix kmeans_pp_gamma(const Dataset& data, int K, std::uint64_t seed) {
  const int n = data.n();
  Matrix gamma = Matrix::Zero(n, K);
  if (K == 1) {
    gamma.setOnes();
    return gamma;
  }
  const Matrix Z = standardized_features(data);
  Rng rng(seed);

  Matrix centers(K, Z.cols());
  centers.row(0) = Z.row(rng.uniform_int(n));
  Vector d2 = (Z.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < K; ++c) {
    const int pick = d2.sum() > 0.0 ? rng.discrete(d2) : rng.uniform_int(n);
    centers.row(c) = Z.row(pick);
    d2 = d2.cwiseMin((Z.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (Z.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < K; ++c) {
        const double d = (Z.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    for (int c = 0; c < K; ++c) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(Z.cols());
      int count = 0;
      for (int i = 0; i < n; ++i)
        if (assign[i] == c) {
          mean += Z.row(i);
          ++count;
        }
      if (count > 0) {
        centers.row(c) = mean / count;
      } else {
        // re-seed an emptied cluster at the point farthest from its center
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = (Z.row(i) - centers.row(assign[i])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers.row(c) = Z.row(far);
      }
    }
  }
  for (int i = 0; i < n; ++i) gamma(i, assign[i]) = 1.0;
  return gamma;
}

// E-step in the rescaled parameterization. Fills the per-cluster residual
// matrices R_k = Y diag(p_k) - X phi_k^T and, optionally, the average
// log-likelihood of the current model.
Matrix estep_rescaled(const Dataset& data, const Vector& pi, const std::vector<Matrix>& phi,
                      const std::vector<Vector>& p_diag, std::vector<Matrix>* residuals = nullptr,
                      double* avg_loglik = nullptr) {
  const int n = data.n();
  const int q = data.q();
  const int K = static_cast<int>(pi.size());
  Matrix L(n, K);
  if (residuals) residuals->resize(K);
  for (int k = 0; k < K; ++k) {
    Matrix R = data.Y * p_diag[k].asDiagonal();
    R.noalias() -= data.X * phi[k].transpose();
    const double cst = std::log(pi[k]) + p_diag[k].array().log().sum() - 0.5 * q * kLog2Pi;
    L.col(k) = (-0.5 * R.rowwise().squaredNorm()).array() + cst;
    if (residuals) (*residuals)[k] = std::move(R);
  }
  Matrix gamma(n, K);
  double ll = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = L.row(i).maxCoeff();
    double acc = 0.0;
    for (int k = 0; k < K; ++k) acc += std::exp(L(i, k) - m);
    const double lse = m + std::log(acc);
    for (int k = 0; k < K; ++k) gamma(i, k) = std::exp(L(i, k) - lse);
    ll += lse;
  }
  if (avg_loglik) *avg_loglik = ll / n;
  return gamma;
}

double l1_norm(const Matrix& m) { return m.cwiseAbs().sum(); }

double penalty_term(const Vector& pi, const std::vector<Matrix>& phi, double lambda) {
  double pen = 0.0;
  for (int k = 0; k < static_cast<int>(pi.size()); ++k) pen += pi[k] * l1_norm(phi[k]);
  return lambda * pen;
}

// Penalized objective -(1/n) loglik + lambda sum_k pi_k ||phi_k||_1.
double penalized_objective(const Dataset& data, const EmState& s, double lambda) {
  double avg_ll = 0.0;
  estep_rescaled(data, s.pi, s.phi, s.p_diag, nullptr, &avg_ll);
  return -avg_ll + penalty_term(s.pi, s.phi, lambda);
}

// pi-dependent part of the surrogate: (1/n) sum_k n_k (-log pi_k) + lambda sum pi_k c_k.
double pi_surrogate(const Vector& nk_over_n, const Vector& pi, const Vector& phi_l1,
                    double lambda) {
  double v = 0.0;
  for (int k = 0; k < pi.size(); ++k)
    v += -nk_over_n[k] * std::log(pi[k]) + lambda * pi[k] * phi_l1[k];
  return v;
}

// Positive root of p^2 A - p B - nk = 0, the stationarity condition of the
// p_diag block; written identically wherever the update is applied so the
// phi = 0 trajectory is bit-reproducible.
double p_root(double A, double B, double nk) {
  if (!(A > 0.0)) return kPCap;
  return std::clamp((B + std::sqrt(B * B + 4.0 * A * nk)) / (2.0 * A), kPFloor, kPCap);
}

struct MStepContext {
  const Dataset& data;
  const LassoFitConfig& cfg;
  EmState& state;
  std::vector<Matrix>& R;  // per-cluster residuals, kept in sync
  int iteration = 0;
};

double surrogate_of(const MStepContext& ctx) {
  return penalized_surrogate(ctx.data, ctx.state.gamma, ctx.state.pi, ctx.state.phi,
                             ctx.state.p_diag, ctx.cfg.lambda);
}

// pi block: responsibility averages. The averages minimize the unpenalized
// part; when the penalty coupling would make them increase the surrogate, the
// move is shortened to the best point on the segment toward the averages,
// which both preserves descent and avoids the penalty-avoidance collapse the
// exact coupled minimizer exhibits (tiny pi_k for clusters with large phi).
void pi_block(MStepContext& ctx, const Vector& nk) {
  const bool instrumented = ctx.cfg.descent_log != nullptr;
  const double q_before = instrumented ? surrogate_of(ctx) : 0.0;
  const int K = static_cast<int>(ctx.state.pi.size());
  Vector phi_l1(K);
  for (int k = 0; k < K; ++k) phi_l1[k] = l1_norm(ctx.state.phi[k]);
  const Vector w = nk / ctx.data.n();
  const double s_old = pi_surrogate(w, ctx.state.pi, phi_l1, ctx.cfg.lambda);
  if (pi_surrogate(w, w, phi_l1, ctx.cfg.lambda) <= s_old) {
    ctx.state.pi = w;
  } else {
    // golden-section search over pi_old + t (w - pi_old), t in [0, 1]
    const Vector dir = w - ctx.state.pi;
    auto value = [&](double t) {
      return pi_surrogate(w, ctx.state.pi + t * dir, phi_l1, ctx.cfg.lambda);
    };
    constexpr double kInvPhi = 0.6180339887498949;
    double lo = 0.0, hi = 1.0;
    double m1 = hi - kInvPhi * (hi - lo), m2 = lo + kInvPhi * (hi - lo);
    double v1 = value(m1), v2 = value(m2);
    for (int it = 0; it < 80; ++it) {
      if (v1 <= v2) {
        hi = m2;
        m2 = m1;
        v2 = v1;
        m1 = hi - kInvPhi * (hi - lo);
        v1 = value(m1);
      } else {
        lo = m1;
        m1 = m2;
        v1 = v2;
        m2 = lo + kInvPhi * (hi - lo);
        v2 = value(m2);
      }
    }
    const double t = 0.5 * (lo + hi);
    const Vector candidate = ctx.state.pi + t * dir;
    if (pi_surrogate(w, candidate, phi_l1, ctx.cfg.lambda) <= s_old) ctx.state.pi = candidate;
  }
  if (instrumented)
    ctx.cfg.descent_log->push_back({ctx.iteration, "pi", q_before, surrogate_of(ctx)});
}

// Coordinate descent over the phi entries to (approximate) stationarity of the
// penalized surrogate at the current responsibilities. The q coordinates of
// one column touch disjoint residual columns, so a column updates as a batch;
// sweeps after the first visit only active columns, with a full verification
// pass before convergence is accepted.
void phi_block(MStepContext& ctx) {
  const bool instrumented = ctx.cfg.descent_log != nullptr;
  const int n = ctx.data.n();
  const int p = ctx.data.p();
  const int q = ctx.data.q();
  const int K = static_cast<int>(ctx.state.pi.size());
  constexpr int kMaxSweeps = 20;
  for (int k = 0; k < K; ++k) {
    const double thr = ctx.cfg.lambda * ctx.state.pi[k];
    Vector a(p);
    std::vector<Vector> w(p);
    for (int j = 0; j < p; ++j) {
      w[j] = ctx.state.gamma.col(k).cwiseProduct(ctx.data.X.col(j));
      a[j] = w[j].dot(ctx.data.X.col(j)) / n;
    }

    Vector c(q), next(q);
    auto update_column = [&](int j) -> double {
      if (!(a[j] > 0.0)) {
        // no weighted mass on this column; the penalty pins it at zero
        const double change = ctx.state.phi[k].col(j).cwiseAbs().maxCoeff();
        if (change > 0.0) {
          ctx.R[k].noalias() += ctx.data.X.col(j) * ctx.state.phi[k].col(j).transpose();
          ctx.state.phi[k].col(j).setZero();
        }
        return change;
      }
      if (instrumented) {
        double change = 0.0;
        for (int z = 0; z < q; ++z) {
          const double q_before = surrogate_of(ctx);
          const double old = ctx.state.phi[k](z, j);
          const double cz = w[j].dot(ctx.R[k].col(z)) / n + a[j] * old;
          const double mag = std::abs(cz) - thr;
          const double val = mag > 0.0 ? (cz > 0.0 ? mag : -mag) / a[j] : 0.0;
          if (val != old) {
            ctx.R[k].col(z) -= (val - old) * ctx.data.X.col(j);
            ctx.state.phi[k](z, j) = val;
          }
          change = std::max(change, std::abs(val - old));
          ctx.cfg.descent_log->push_back({ctx.iteration, "phi", q_before, surrogate_of(ctx)});
        }
        return change;
      }
      c.noalias() = ctx.R[k].transpose() * w[j] / n;
      c += a[j] * ctx.state.phi[k].col(j);
      for (int z = 0; z < q; ++z) {
        const double mag = std::abs(c[z]) - thr;
        next[z] = mag > 0.0 ? (c[z] > 0.0 ? mag : -mag) / a[j] : 0.0;
      }
      const Vector delta = next - ctx.state.phi[k].col(j);
      const double change = delta.cwiseAbs().maxCoeff();
      if (change > 0.0) {
        ctx.R[k].noalias() -= ctx.data.X.col(j) * delta.transpose();
        ctx.state.phi[k].col(j) = next;
      }
      return change;
    };

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      double max_change = 0.0;
      bool full_pass = true;
      for (int j = 0; j < p; ++j) {
        if (sweep > 0 && !(ctx.state.phi[k].col(j).cwiseAbs().maxCoeff() > 0.0)) {
          full_pass = false;
          continue;
        }
        max_change = std::max(max_change, update_column(j));
      }
      const double scale = 1.0 + ctx.state.phi[k].cwiseAbs().maxCoeff();
      if (max_change <= 1e-9 * scale) {
        if (full_pass) break;
        double violation = 0.0;
        for (int j = 0; j < p; ++j) violation = std::max(violation, update_column(j));
        if (violation <= 1e-9 * scale) break;
      }
    }
  }
}

void p_block(MStepContext& ctx, const Vector& nk) {
  const bool instrumented = ctx.cfg.descent_log != nullptr;
  const int q = ctx.data.q();
  const int K = static_cast<int>(ctx.state.pi.size());
  for (int k = 0; k < K; ++k) {
    for (int z = 0; z < q; ++z) {
      const double q_before = instrumented ? surrogate_of(ctx) : 0.0;
      const double p_old = ctx.state.p_diag[k][z];
      const Vector wy = ctx.state.gamma.col(k).cwiseProduct(ctx.data.Y.col(z));
      const double A = wy.dot(ctx.data.Y.col(z));
      const Vector m = p_old * ctx.data.Y.col(z) - ctx.R[k].col(z);
      const double B = wy.dot(m);
      const double p_new = p_root(A, B, nk[k]);
      if (p_new != p_old) {
        ctx.R[k].col(z) += (p_new - p_old) * ctx.data.Y.col(z);
        ctx.state.p_diag[k][z] = p_new;
      }
      if (instrumented)
        ctx.cfg.descent_log->push_back({ctx.iteration, "p", q_before, surrogate_of(ctx)});
    }
  }
}

struct RunOutcome {
  bool collapsed = false;
  bool converged = false;
  int iterations = 0;
  double objective = std::numeric_limits<double>::infinity();
  EmState state;
};

// One generalized EM run. The first M-step consumes the initial (k-means++)
// responsibilities directly; subsequent iterations are E-step then M-step.
RunOutcome run_em(const Dataset& data, const LassoFitConfig& cfg, Matrix gamma0) {
  const int n = data.n();
  const int q = data.q();
  const int K = static_cast<int>(gamma0.cols());

  RunOutcome out;
  EmState state;
  state.gamma = std::move(gamma0);
  Vector nk = state.gamma.colwise().sum();
  if (nk.minCoeff() < cfg.cluster_floor) {
    out.collapsed = true;
    return out;
  }
  state.pi = nk / n;
  state.phi.assign(K, Matrix::Zero(q, data.p()));
  state.p_diag.assign(K, Vector::Ones(q));

  std::vector<Matrix> R(K);
  for (int k = 0; k < K; ++k) R[k] = data.Y;  // residuals at phi = 0, p = 1
  MStepContext ctx{data, cfg, state, R, 0};

  // initialization: scale p to the responsibility-weighted second moments
  for (int k = 0; k < K; ++k) {
    for (int z = 0; z < q; ++z) {
      const Vector wy = state.gamma.col(k).cwiseProduct(data.Y.col(z));
      const double p_new = p_root(wy.dot(data.Y.col(z)), 0.0, nk[k]);
      R[k].col(z) += (p_new - 1.0) * data.Y.col(z);
      state.p_diag[k][z] = p_new;
    }
  }

  // init M-step from the raw initial responsibilities
  pi_block(ctx, nk);
  phi_block(ctx);
  p_block(ctx, nk);

  double obj = penalized_objective(data, state, cfg.lambda);
  if (cfg.objective_trace) cfg.objective_trace->push_back(obj);

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    ctx.iteration = iter;
    state.gamma = estep_rescaled(data, state.pi, state.phi, state.p_diag, &R);
    nk = state.gamma.colwise().sum();
    if (nk.minCoeff() < cfg.cluster_floor) {
      out.collapsed = true;
      return out;
    }

    const Vector pi_old = state.pi;
    const std::vector<Matrix> phi_old = state.phi;
    const std::vector<Vector> p_old = state.p_diag;

    pi_block(ctx, nk);
    phi_block(ctx);
    p_block(ctx, nk);

    const double new_obj = penalized_objective(data, state, cfg.lambda);
    if (cfg.objective_trace) cfg.objective_trace->push_back(new_obj);

    double par_change = (state.pi - pi_old).cwiseAbs().maxCoeff();
    for (int k = 0; k < K; ++k) {
      par_change = std::max(par_change, (state.phi[k] - phi_old[k]).cwiseAbs().maxCoeff() /
                                            (1.0 + phi_old[k].cwiseAbs().maxCoeff()));
      par_change = std::max(par_change, (state.p_diag[k] - p_old[k]).cwiseAbs().maxCoeff() /
                                            (1.0 + p_old[k].cwiseAbs().maxCoeff()));
    }
    const double obj_change = std::abs(new_obj - obj) / (1.0 + std::abs(obj));
    obj = new_obj;
    out.iterations = iter;
    if (obj_change < cfg.rel_tol && par_change < cfg.rel_tol) {
      out.converged = true;
      break;
    }
  }

  // refresh gamma so the reported responsibilities match the final parameters
  state.gamma = estep_rescaled(data, state.pi, state.phi, state.p_diag);
  out.objective = obj;
  out.state = std::move(state);
  return out;
}

// Largest |score| / pi along the phi = 0 trajectory from one k-means++ start:
// the smallest lambda that keeps every phi coordinate at zero through a fit
// from this start. Mirrors run_em with phi pinned at zero. The trajectory is
// tracked with the minimal floor of one observation-equivalent regardless of
// the fit's configured floor: a stricter floor only truncates the trajectory
// the real fit would take, never extends it.
double null_trajectory_score(const Dataset& data, int K, std::uint64_t seed, bool* collapsed) {
  const int n = data.n();
  const int q = data.q();
  const double cluster_floor = 1.0;
  *collapsed = false;
  Matrix gamma = kmeans_pp_gamma(data, K, seed);
  Vector nk = gamma.colwise().sum();
  if (nk.minCoeff() < cluster_floor) {
    *collapsed = true;
    return 0.0;
  }
  Vector pi = nk / n;
  std::vector<Vector> p(K, Vector::Ones(q));
  for (int k = 0; k < K; ++k)
    for (int z = 0; z < q; ++z) {
      const Vector wy = gamma.col(k).cwiseProduct(data.Y.col(z));
      p[k][z] = p_root(wy.dot(data.Y.col(z)), 0.0, nk[k]);
    }
  const std::vector<Matrix> phi0(K, Matrix::Zero(q, data.p()));

  double sup = 0.0;
  Matrix prev_gamma;
  for (int t = 0; t < 1000; ++t) {
    if (t > 0) {
      prev_gamma = gamma;
      gamma = estep_rescaled(data, pi, phi0, p);
      if ((gamma - prev_gamma).cwiseAbs().maxCoeff() < 1e-13) break;
      nk = gamma.colwise().sum();
      if (nk.minCoeff() < cluster_floor) {
        *collapsed = true;
        return 0.0;
      }
      pi = nk / n;
    }
    // score seen by the phi sweep: current gamma and pi, p from the previous step
    for (int k = 0; k < K; ++k) {
      const Matrix R0 = data.Y * p[k].asDiagonal();
      const Matrix score = data.X.transpose() * (gamma.col(k).asDiagonal() * R0) / n;
      sup = std::max(sup, score.cwiseAbs().maxCoeff() / pi[k]);
    }
    for (int k = 0; k < K; ++k)
      for (int z = 0; z < q; ++z) {
        const Vector wy = gamma.col(k).cwiseProduct(data.Y.col(z));
        p[k][z] = p_root(wy.dot(data.Y.col(z)), 0.0, nk[k]);
      }
  }
  return sup;
}

}  // namespace

void LassoFitConfig::validate() const {
  if (!(lambda >= 0.0)) throw InvalidInput("lasso config: lambda must be >= 0");
  if (max_iter < 1) throw InvalidInput("lasso config: max_iter must be >= 1");
  if (!(rel_tol > 0.0)) throw InvalidInput("lasso config: rel_tol must be > 0");
  if (n_restarts < 1) throw InvalidInput("lasso config: n_restarts must be >= 1");
}

Responsibilities estep(const MixtureRegressionModel& model, const Dataset& data) {
  model.validate();
  data.validate();
  if (data.p() != model.p() || data.q() != model.q())
    throw InvalidInput("estep: dimension mismatch");
  const RescaledParameters rp = to_rescaled(model);
  return Responsibilities{estep_rescaled(data, model.pi, rp.phi, rp.p_diag)};
}

double penalized_surrogate(const Dataset& data, const Matrix& gamma, const Vector& pi,
                           const std::vector<Matrix>& phi, const std::vector<Vector>& p_diag,
                           double lambda) {
  const int n = data.n();
  const int q = data.q();
  const int K = static_cast<int>(pi.size());
  double acc = 0.0;
  for (int k = 0; k < K; ++k) {
    Matrix R = data.Y * p_diag[k].asDiagonal();
    R.noalias() -= data.X * phi[k].transpose();
    const double cst = -std::log(pi[k]) - p_diag[k].array().log().sum() + 0.5 * q * kLog2Pi;
    acc += gamma.col(k).sum() * cst + 0.5 * gamma.col(k).dot(R.rowwise().squaredNorm());
  }
  return acc / n + penalty_term(pi, phi, lambda);
}

std::vector<int> active_columns(const std::vector<Matrix>& phi, double support_eps) {
  if (phi.empty()) return {};
  std::vector<int> J;
  for (int j = 0; j < phi[0].cols(); ++j) {
    double m = 0.0;
    for (const Matrix& f : phi) m = std::max(m, f.col(j).cwiseAbs().maxCoeff());
    if (m > support_eps) J.push_back(j);
  }
  return J;
}

namespace {

SupportResult outcome_to_result(const Dataset& data, const LassoFitConfig& cfg,
                                const RunOutcome& best) {
  SupportResult result;
  result.lambda = cfg.lambda;
  result.J = active_columns(best.state.phi, cfg.support_eps);
  result.model =
      from_rescaled(best.state.pi, RescaledParameters{best.state.phi, best.state.p_diag});
  result.gamma = Responsibilities{best.state.gamma};
  result.objective = -log_likelihood(result.model, data) / data.n() +
                     penalty_term(best.state.pi, best.state.phi, cfg.lambda);
  result.converged = best.converged;
  result.iterations = best.iterations;
  return result;
}

}  // namespace

SupportResult lasso_em_fit(const Dataset& data, int K, const LassoFitConfig& cfg) {
  data.validate();
  cfg.validate();
  if (K < 1) throw InvalidInput("lasso_em_fit: K must be >= 1");

  RunOutcome best;
  bool have_best = false;
  for (int r = 0; r < cfg.n_restarts; ++r) {
    RunOutcome run = run_em(data, cfg, kmeans_pp_gamma(data, K, cfg.seed + r));
    if (run.collapsed) continue;
    if (!have_best || run.objective < best.objective) {
      best = std::move(run);
      have_best = true;
    }
  }
  if (!have_best)
    throw DegenerateFit("lasso_em_fit: all " + std::to_string(cfg.n_restarts) +
                        " restarts collapsed (empty cluster)");
  return outcome_to_result(data, cfg, best);
}

SupportResult lasso_em_fit_with_init(const Dataset& data, int K, const LassoFitConfig& cfg,
                                     const Responsibilities& init) {
  data.validate();
  cfg.validate();
  if (K < 1) throw InvalidInput("lasso_em_fit: K must be >= 1");
  if (init.gamma.rows() != data.n() || init.gamma.cols() != K)
    throw InvalidInput("lasso_em_fit: init responsibilities have wrong shape");
  const RunOutcome run = run_em(data, cfg, init.gamma);
  if (run.collapsed) throw DegenerateFit("lasso_em_fit: run collapsed (empty cluster)");
  return outcome_to_result(data, cfg, run);
}

std::vector<double> lambda_grid(const Dataset& data, int K, int G, const LassoFitConfig& cfg) {
  data.validate();
  if (G < 2) throw InvalidInput("lambda_grid: G must be >= 2");
  if (K < 1) throw InvalidInput("lambda_grid: K must be >= 1");

  double lmax_raw = 0.0;
  int usable = 0;
  for (int r = 0; r < cfg.n_restarts; ++r) {
    bool collapsed = false;
    const double sup =
        null_trajectory_score(data, K, cfg.seed + r, &collapsed);
    if (collapsed) continue;
    ++usable;
    lmax_raw = std::max(lmax_raw, sup);
  }
  if (usable == 0) throw DegenerateFit("lambda_grid: all null-model restarts collapsed");
  if (!(lmax_raw > 0.0) || !std::isfinite(lmax_raw))
    throw InvalidInput("lambda_grid: responses carry no signal (no informative grid)");

  double lmax = lmax_raw * (1.0 + 1e-10);
  // The zeroing threshold is verified by running the fit; responsibilities can
  // drift a little past the trajectory used to compute the scores.
  LassoFitConfig probe = cfg;
  probe.descent_log = nullptr;
  probe.objective_trace = nullptr;
  for (int attempt = 0; attempt < 50; ++attempt) {
    probe.lambda = lmax;
    try {
      const SupportResult fit = lasso_em_fit(data, K, probe);
      if (fit.J.empty()) break;
    } catch (const DegenerateFit&) {
      break;  // collapsed runs return no support either
    }
    lmax *= 1.0 + 1e-6 * static_cast<double>(1L << std::min(attempt, 20));
  }

  std::vector<double> grid(G);
  for (int g = 0; g < G; ++g) {
    const double expo = -3.0 * static_cast<double>(G - 1 - g) / static_cast<double>(G - 1);
    grid[g] = lmax * std::pow(10.0, expo);
  }
  grid[G - 1] = lmax;
  return grid;
}

}  // namespace rrmix
