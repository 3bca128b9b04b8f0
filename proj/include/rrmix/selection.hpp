#pragma once

#include <string>
#include <vector>

#include "rrmix/collection.hpp"

namespace rrmix {

enum class SelectionMode { SlopeDimensionJump, Theoretical, Bic };

struct PenaltyConfig {
  SelectionMode mode = SelectionMode::SlopeDimensionJump;
  double kappa = 1.0;       // used by Theoretical; SlopeDimensionJump calibrates its own
  bool calibrate = true;    // false pins kappa for the slope criterion too
  BoundsConfig bounds;

  void validate() const;
};

struct CriterionRow {
  ModelIndex index;
  double loglik = 0.0;
  long dim_means = 0;
  long dim_full = 0;
  double penalty = 0.0;
  double criterion = 0.0;
};

struct SelectionResult {
  int chosen = -1;  // position in the collection
  double kappa_used = 0.0;
  std::string mode = "";
  bool fallback_bic = false;
  std::vector<CriterionRow> table;  // parallel to the collection
};

// Theorem-shaped penalty
//   kappa * D/n * { 2B^2 - log(D/n * B^2 ^ 1) + log(4epq / clamp(D - q^2) + Rmax) },
// with B = 3 + sqrt(log((A_S/a_S + 1/2)(A_s/a_S))) + sqrt(log(p^2 q Rmax + 3q/4))
// and clamp(t) = min(max(t, 1), pq). clamp_active, when non-null, reports
// whether the clamp replaced a nonpositive D - q^2.
double theoretical_penalty(const ModelIndex& index, long n, int p, int q,
                           const BoundsConfig& bounds, double kappa,
                           bool* clamp_active = nullptr);

// Kraft complexity weight x_(K,J,R) = D log(4epq / clamp(D - q^2)) + max_k R(k).
double kraft_weight(const ModelIndex& index, int p, int q, bool* clamp_active = nullptr);

// Slope-heuristic selection with dimension-jump calibration of kappa; falls
// back to BIC (flagged) when the collection has fewer than 3 distinct
// dimensions or no jump is detected.
SelectionResult slope_select(const Collection& collection, long n);

// Dispatch on PenaltyConfig::mode.
SelectionResult select_model(const Collection& collection, long n, int p, int q,
                             const PenaltyConfig& cfg);

}  // namespace rrmix
