#include "rrmix/collection.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "rrmix/parallel.hpp"
#include "rrmix/rng.hpp"

namespace rrmix {

namespace {

// All rank vectors for a support of size J_size: K-tuples over
// {r_min..min(r_max, |J|, q)} in cartesian mode, equal-rank tuples in shared.
std::vector<std::vector<int>> rank_vectors(int K, int r_min, int r_max, int J_size, int q,
                                           RankMode mode) {
  const int cap = std::min({r_max, J_size, q});
  std::vector<std::vector<int>> out;
  if (cap < r_min) return out;
  if (mode == RankMode::Shared) {
    for (int r = r_min; r <= cap; ++r) out.emplace_back(K, r);
    return out;
  }
  std::vector<int> current(K, r_min);
  for (;;) {
    out.push_back(current);
    int pos = K - 1;
    while (pos >= 0 && current[pos] == cap) {
      current[pos] = r_min;
      --pos;
    }
    if (pos < 0) break;
    ++current[pos];
  }
  return out;
}

}  // namespace

void CollectionConfig::validate() const {
  if (K_set.empty()) throw InvalidInput("collection config: K_set must be non-empty");
  for (int k : K_set)
    if (k < 1) throw InvalidInput("collection config: K values must be positive");
  if (G < 2) throw InvalidInput("collection config: grid size must be >= 2");
  if (r_min < 1) throw InvalidInput("collection config: r_min must be >= 1");
  if (r_max < r_min) throw InvalidInput("collection config: r_max must be >= r_min");
  lasso.validate();
}

Collection build_collection(const Dataset& data, const CollectionConfig& cfg) {
  data.validate();
  cfg.validate();
  const int q = data.q();

  struct SupportTask {
    int K;
    double lambda;
    std::vector<int> J;
    Responsibilities gamma;       // responsibilities of the fit that found J
    Responsibilities gamma_best;  // responsibilities of the best fit on the grid for this K
  };
  std::vector<SupportTask> supports;
  std::ostringstream diagnostics;

  for (int K : cfg.K_set) {
    LassoFitConfig lcfg = cfg.lasso;
    lcfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(K));
    std::vector<double> grid;
    try {
      grid = lambda_grid(data, K, cfg.G, lcfg);
    } catch (const DegenerateFit& e) {
      diagnostics << "K=" << K << ": " << e.what() << "; ";
      continue;
    }

    std::vector<std::optional<SupportResult>> fits(grid.size());
    parallel_for(static_cast<int>(grid.size()), cfg.workers, [&](int g) {
      LassoFitConfig fit_cfg = lcfg;
      fit_cfg.lambda = grid[g];
      try {
        fits[g] = lasso_em_fit(data, K, fit_cfg);
      } catch (const DegenerateFit&) {
        fits[g] = std::nullopt;
      }
    });

    // heavily regularized fits carry blurred responsibilities; keep the
    // best-objective fit's responsibilities as an alternative refit seed
    int best_g = -1;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (!fits[g] || fits[g]->J.empty()) continue;
      if (best_g < 0 || fits[g]->objective < fits[best_g]->objective)
        best_g = static_cast<int>(g);
    }

    // deduplicate supports across lambda; the first grid point producing a
    // support wins the provenance entry
    std::map<std::vector<int>, std::pair<double, Responsibilities>> seen;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (!fits[g] || fits[g]->J.empty()) continue;
      if (seen.emplace(fits[g]->J, std::make_pair(grid[g], fits[g]->gamma)).second)
        supports.push_back({K, grid[g], fits[g]->J, fits[g]->gamma, fits[best_g]->gamma});
    }
    if (seen.empty()) diagnostics << "K=" << K << ": no non-empty support on the grid; ";
  }

  if (supports.empty())
    throw DegenerateFit("build_collection: empty support collection (" + diagnostics.str() + ")");

  struct SupportFits {
    std::vector<std::vector<int>> ranks;
    std::vector<std::optional<FittedModel>> fits;
  };
  std::vector<SupportFits> per_support(supports.size());
  for (std::size_t s = 0; s < supports.size(); ++s) {
    per_support[s].ranks = rank_vectors(supports[s].K, cfg.r_min, cfg.r_max,
                                        static_cast<int>(supports[s].J.size()), q, cfg.rank_mode);
    // larger rank vectors first so their posteriors can warm-start the rest
    std::sort(per_support[s].ranks.begin(), per_support[s].ranks.end(),
              [](const std::vector<int>& a, const std::vector<int>& b) {
                const long sa = std::accumulate(a.begin(), a.end(), 0L);
                const long sb = std::accumulate(b.begin(), b.end(), 0L);
                if (sa != sb) return sa > sb;
                return a > b;
              });
    per_support[s].fits.resize(per_support[s].ranks.size());
  }

  parallel_for(static_cast<int>(supports.size()), cfg.workers, [&](int si) {
    const SupportTask& s = supports[si];
    const bool same_init = (s.gamma.gamma.array() == s.gamma_best.gamma.array()).all();
    const std::uint64_t support_seed = derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(si));
    // seeded random splits, for when every Lasso fit carries blurred
    // responsibilities
    Rng rng(support_seed);
    std::vector<Responsibilities> random_inits(2, Responsibilities{Matrix::Zero(data.n(), s.K)});
    for (Responsibilities& init : random_inits)
      for (int i = 0; i < data.n(); ++i) init.gamma(i, rng.uniform_int(s.K)) = 1.0;

    std::optional<Responsibilities> warm;  // posterior of the previous (larger) fit
    SupportFits& out = per_support[si];
    for (std::size_t t = 0; t < out.ranks.size(); ++t) {
      RankFitConfig rcfg;
      rcfg.R = out.ranks[t];
      rcfg.max_iter = cfg.rank_max_iter;
      rcfg.rel_tol = cfg.rank_rel_tol;
      rcfg.seed = derive_seed(support_seed, t);
      std::vector<const Responsibilities*> inits = {&s.gamma};
      if (!same_init) inits.push_back(&s.gamma_best);
      for (const Responsibilities& init : random_inits) inits.push_back(&init);
      if (warm) inits.push_back(&*warm);
      for (const Responsibilities* init : inits) {
        try {
          FittedModel fit = rank_em_fit(data, s.J, s.K, rcfg, *init);
          if (!out.fits[t] || fit.loglik > out.fits[t]->loglik) out.fits[t] = std::move(fit);
        } catch (const DegenerateFit&) {
        }
      }
      if (out.fits[t]) warm = estep(out.fits[t]->model, data);
    }
  });

  struct Entry {
    const SupportTask* support;
    const std::vector<int>* R;
    FittedModel* fit;
  };
  std::vector<Entry> entries;
  for (std::size_t si = 0; si < supports.size(); ++si)
    for (std::size_t t = 0; t < per_support[si].fits.size(); ++t)
      if (per_support[si].fits[t])
        entries.push_back({&supports[si], &per_support[si].ranks[t], &*per_support[si].fits[t]});
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return index_less(a.fit->index, b.fit->index); });

  Collection out;
  for (const Entry& e : entries) {
    if (!out.fits.empty() && out.fits.back().index == e.fit->index) continue;
    out.provenance.push_back({e.support->K, e.support->lambda, e.support->J, *e.R});
    out.fits.push_back(std::move(*e.fit));
  }
  if (out.fits.empty()) throw DegenerateFit("build_collection: every rank fit collapsed");
  return out;
}

}  // namespace rrmix
