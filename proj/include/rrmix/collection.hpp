#pragma once

#include <cstdint>
#include <vector>

#include "rrmix/rank_em.hpp"

namespace rrmix {

enum class RankMode { Shared, Cartesian };

struct CollectionConfig {
  std::vector<int> K_set = {2};
  int G = 15;                 // lambda grid size
  int r_min = 1;
  int r_max = 4;              // capped per support at min(|J|, q)
  RankMode rank_mode = RankMode::Cartesian;
  LassoFitConfig lasso;       // lambda is filled in per grid point
  int rank_max_iter = 200;
  double rank_rel_tol = 1e-6;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

// Where a fit came from: the (K, lambda) Lasso run that produced its support.
struct Provenance {
  int K = 0;
  double lambda = 0.0;
  std::vector<int> J;
  std::vector<int> R;
};

struct Collection {
  std::vector<FittedModel> fits;
  std::vector<Provenance> provenance;  // parallel to fits
};

// Builds the model collection: for each K, lambda grid -> Lasso supports
// (deduplicated, empty supports dropped) -> rank_em_fit for every rank vector
// on every support, seeded from the Lasso responsibilities. Fits are sorted
// by (K, J, R); collapsed fits are dropped.
Collection build_collection(const Dataset& data, const CollectionConfig& cfg);

}  // namespace rrmix
