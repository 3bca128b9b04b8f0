#include "rrmix/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

namespace rrmix {

namespace {

long max_rank(const ModelIndex& index) {
  return *std::max_element(index.R.begin(), index.R.end());
}

long sum_rank(const ModelIndex& index) {
  return std::accumulate(index.R.begin(), index.R.end(), 0L);
}

// min(max(D - q^2, 1), pq), the argument of the complexity logarithms.
double clamp_dim(long D, int p, int q, bool* clamp_active) {
  const long raw = D - static_cast<long>(q) * q;
  if (clamp_active) *clamp_active = raw < 1;
  return static_cast<double>(std::min(std::max(raw, 1L), static_cast<long>(p) * q));
}

// Tie order: criterion, then smaller dim_full, then lexicographic (K, |J|, sum R).
bool row_better(const CriterionRow& a, const CriterionRow& b) {
  if (a.criterion != b.criterion) return a.criterion < b.criterion;
  if (a.dim_full != b.dim_full) return a.dim_full < b.dim_full;
  if (a.index.K != b.index.K) return a.index.K < b.index.K;
  if (a.index.J.size() != b.index.J.size()) return a.index.J.size() < b.index.J.size();
  return sum_rank(a.index) < sum_rank(b.index);
}

int argmin_row(const std::vector<CriterionRow>& table) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(table.size()); ++i)
    if (row_better(table[i], table[best])) best = i;
  return best;
}

SelectionResult bic_select(const Collection& collection, long n, bool fallback) {
  SelectionResult out;
  out.mode = "bic";
  out.fallback_bic = fallback;
  out.kappa_used = 0.0;
  for (const FittedModel& fit : collection.fits) {
    CriterionRow row;
    row.index = fit.index;
    row.loglik = fit.loglik;
    row.dim_means = fit.dim_means;
    row.dim_full = fit.dim_full;
    row.penalty = static_cast<double>(fit.dim_full) * std::log(static_cast<double>(n));
    row.criterion = -2.0 * fit.loglik + row.penalty;
    out.table.push_back(row);
  }
  out.chosen = argmin_row(out.table);
  return out;
}

}  // namespace

void PenaltyConfig::validate() const {
  if (!calibrate && !(kappa > 0.0)) throw InvalidInput("penalty config: kappa must be > 0");
  bounds.validate();
}

double theoretical_penalty(const ModelIndex& index, long n, int p, int q,
                           const BoundsConfig& bounds, double kappa, bool* clamp_active) {
  bounds.validate();
  if (n < 1) throw InvalidInput("theoretical_penalty: n must be positive");
  const long D = dimension(index, q, DimensionMode::MeansOnly);
  const double Rmax = static_cast<double>(max_rank(index));
  const double a_sigma = std::sqrt(bounds.a_sigma_sq);
  const double A_sigma = std::sqrt(bounds.A_sigma_sq);

  const double bound_term = std::max((A_sigma / a_sigma + 0.5) * (bounds.A_singular / a_sigma), 1.0);
  const double size_term =
      std::max(static_cast<double>(p) * p * q * Rmax + 0.75 * q, 1.0);
  const double B = 3.0 + std::sqrt(std::log(bound_term)) + std::sqrt(std::log(size_term));

  const double Dn = static_cast<double>(D) / static_cast<double>(n);
  const double log_local = -std::log(std::min(Dn * B * B, 1.0));
  const double complexity =
      std::log(4.0 * std::numbers::e * p * q / clamp_dim(D, p, q, clamp_active) + Rmax);
  return kappa * Dn * (2.0 * B * B + log_local + complexity);
}

double kraft_weight(const ModelIndex& index, int p, int q, bool* clamp_active) {
  const long D = dimension(index, q, DimensionMode::MeansOnly);
  const double log_term =
      std::log(4.0 * std::numbers::e * p * q / clamp_dim(D, p, q, clamp_active));
  return static_cast<double>(D) * log_term + static_cast<double>(max_rank(index));
}

SelectionResult slope_select(const Collection& collection, long n) {
  if (collection.fits.empty()) throw InvalidInput("slope_select: empty collection");

  std::set<long> dims;
  for (const FittedModel& fit : collection.fits) dims.insert(fit.dim_full);
  if (dims.size() < 3) return bic_select(collection, n, true);

  double ll_min = collection.fits[0].loglik, ll_max = ll_min;
  long d_min = collection.fits[0].dim_full, d_max = d_min;
  for (const FittedModel& fit : collection.fits) {
    ll_min = std::min(ll_min, fit.loglik);
    ll_max = std::max(ll_max, fit.loglik);
    d_min = std::min(d_min, fit.dim_full);
    d_max = std::max(d_max, fit.dim_full);
  }
  const double ref = (ll_max - ll_min) / static_cast<double>(d_max - d_min);
  if (!(ref > 0.0)) return bic_select(collection, n, true);

  // sweep kappa over a log grid, watch the dimension of the selected model
  constexpr int kGridSize = 100;
  std::vector<double> kappas(kGridSize);
  std::vector<long> selected_dim(kGridSize);
  for (int i = 0; i < kGridSize; ++i) {
    kappas[i] = ref * std::pow(10.0, -3.0 + 6.0 * i / (kGridSize - 1));
    std::vector<CriterionRow> table;
    for (const FittedModel& fit : collection.fits) {
      CriterionRow row;
      row.index = fit.index;
      row.loglik = fit.loglik;
      row.dim_means = fit.dim_means;
      row.dim_full = fit.dim_full;
      row.criterion = -fit.loglik / n + kappas[i] * fit.dim_full / n;
      table.push_back(row);
    }
    selected_dim[i] = table[argmin_row(table)].dim_full;
  }

  // the dimension jump: the smallest kappa at which selection leaves the
  // maximal-dimension (overfitting) regime
  int jump_at = -1;
  for (int i = 1; i < kGridSize; ++i) {
    if (selected_dim[i] < selected_dim[0]) {
      jump_at = i;
      break;
    }
  }
  if (jump_at < 0) return bic_select(collection, n, true);

  SelectionResult out;
  out.mode = "slope-dimension-jump";
  out.kappa_used = kappas[jump_at];
  for (const FittedModel& fit : collection.fits) {
    CriterionRow row;
    row.index = fit.index;
    row.loglik = fit.loglik;
    row.dim_means = fit.dim_means;
    row.dim_full = fit.dim_full;
    row.penalty = 2.0 * out.kappa_used * fit.dim_full / n;
    row.criterion = -fit.loglik / n + row.penalty;
    out.table.push_back(row);
  }
  out.chosen = argmin_row(out.table);
  return out;
}

SelectionResult select_model(const Collection& collection, long n, int p, int q,
                             const PenaltyConfig& cfg) {
  cfg.validate();
  if (collection.fits.empty()) throw InvalidInput("select_model: empty collection");
  switch (cfg.mode) {
    case SelectionMode::SlopeDimensionJump:
      return slope_select(collection, n);
    case SelectionMode::Bic:
      return bic_select(collection, n, false);
    case SelectionMode::Theoretical: {
      SelectionResult out;
      out.mode = "theoretical";
      out.kappa_used = cfg.kappa;
      for (const FittedModel& fit : collection.fits) {
        CriterionRow row;
        row.index = fit.index;
        row.loglik = fit.loglik;
        row.dim_means = fit.dim_means;
        row.dim_full = fit.dim_full;
        row.penalty = theoretical_penalty(fit.index, n, p, q, cfg.bounds, cfg.kappa);
        row.criterion = -fit.loglik / n + row.penalty;
        out.table.push_back(row);
      }
      out.chosen = argmin_row(out.table);
      return out;
    }
  }
  throw InvalidInput("select_model: unknown mode");
}

}  // namespace rrmix
