#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "rrmix/collection.hpp"
#include "rrmix/metrics.hpp"
#include "rrmix/rank_em.hpp"
#include "rrmix/rng.hpp"
#include "rrmix/simgen.hpp"

using namespace rrmix;

namespace {

Dataset two_cluster_data(int n, int p, int q, std::uint64_t seed, double coef = 3.0) {
  Rng rng(seed);
  Dataset ds;
  ds.X.resize(n, p);
  ds.Y.resize(n, q);
  ds.true_labels.resize(n);
  Matrix beta(q, p);
  for (int z = 0; z < q; ++z)
    for (int j = 0; j < p; ++j) beta(z, j) = coef * rng.gaussian();
  for (int i = 0; i < n; ++i) {
    const int k = rng.uniform_int(2);
    ds.true_labels[i] = k;
    for (int j = 0; j < p; ++j) ds.X(i, j) = rng.gaussian();
    const Vector mean = (k == 0 ? 1.0 : -1.0) * (beta * ds.X.row(i).transpose());
    for (int z = 0; z < q; ++z) ds.Y(i, z) = mean[z] + 0.5 * rng.gaussian();
  }
  return ds;
}

}  // namespace

TEST_CASE("degenerate grid reduces to OLS fits on the harvested supports") {
  const Dataset ds = two_cluster_data(60, 4, 2, 5);
  CollectionConfig cfg;
  cfg.K_set = {1};
  cfg.G = 2;
  cfg.r_min = 2;  // = q <= |J|
  cfg.r_max = 2;
  cfg.seed = 3;
  const Collection coll = build_collection(ds, cfg);
  REQUIRE(!coll.fits.empty());
  CHECK(coll.fits.size() <= 2);
  for (const FittedModel& fit : coll.fits) {
    Matrix Xj(ds.n(), fit.index.J.size());
    for (std::size_t j = 0; j < fit.index.J.size(); ++j) Xj.col(j) = ds.X.col(fit.index.J[j]);
    const Matrix ols = ols_fit(Xj, ds.Y);
    for (std::size_t j = 0; j < fit.index.J.size(); ++j)
      CHECK((fit.model.beta[0].col(fit.index.J[j]) - ols.col(j)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("cartesian rank vectors multiply out per support") {
  const Dataset ds = two_cluster_data(80, 3, 2, 11);
  CollectionConfig cfg;
  cfg.K_set = {2};
  cfg.G = 2;  // top of the grid is empty, so a single support survives
  cfg.r_min = 1;
  cfg.r_max = 2;
  cfg.rank_mode = RankMode::Cartesian;
  cfg.seed = 7;
  const Collection coll = build_collection(ds, cfg);
  std::set<std::vector<int>> supports;
  for (const FittedModel& fit : coll.fits) supports.insert(fit.index.J);
  if (supports.size() == 1) {
    CHECK(coll.fits.size() == 4);  // {1,2}^2
    std::set<std::vector<int>> ranks;
    for (const FittedModel& fit : coll.fits) ranks.insert(fit.index.R);
    CHECK(ranks == std::set<std::vector<int>>{{1, 1}, {1, 2}, {2, 1}, {2, 2}});
  } else {
    CHECK(coll.fits.size() == 4 * supports.size());
  }

  CollectionConfig shared = cfg;
  shared.rank_mode = RankMode::Shared;
  const Collection coll2 = build_collection(ds, shared);
  std::set<std::vector<int>> ranks2;
  for (const FittedModel& fit : coll2.fits) ranks2.insert(fit.index.R);
  for (const auto& r : ranks2) CHECK(r[0] == r[1]);
}

TEST_CASE("collection size bound and injective provenance") {
  const Dataset ds = two_cluster_data(70, 5, 3, 23);
  CollectionConfig cfg;
  cfg.K_set = {1, 2};
  cfg.G = 6;
  cfg.r_min = 1;
  cfg.r_max = 3;
  cfg.seed = 29;
  const Collection coll = build_collection(ds, cfg);
  REQUIRE(coll.fits.size() == coll.provenance.size());
  // rank grid has at most 3^2 vectors per support for K = 2
  CHECK(coll.fits.size() <= static_cast<std::size_t>(2 * cfg.G * 9));
  std::set<std::tuple<int, std::vector<int>, std::vector<int>>> keys;
  for (const FittedModel& fit : coll.fits) {
    CHECK(keys.insert({fit.index.K, fit.index.J, fit.index.R}).second);  // no duplicates
    CHECK(fit.loglik == doctest::Approx(fit.loglik));                    // finite
  }
  for (std::size_t i = 0; i < coll.fits.size(); ++i) {
    CHECK(coll.provenance[i].K == coll.fits[i].index.K);
    CHECK(coll.provenance[i].J == coll.fits[i].index.J);
    CHECK(coll.provenance[i].R == coll.fits[i].index.R);
  }
}

TEST_CASE("rebuilding with the same seed reproduces the collection exactly") {
  const Dataset ds = two_cluster_data(60, 4, 2, 31);
  CollectionConfig cfg;
  cfg.K_set = {2};
  cfg.G = 4;
  cfg.seed = 17;
  const Collection a = build_collection(ds, cfg);
  const Collection b = build_collection(ds, cfg);
  REQUIRE(a.fits.size() == b.fits.size());
  for (std::size_t i = 0; i < a.fits.size(); ++i) {
    CHECK(a.fits[i].index == b.fits[i].index);
    CHECK(a.fits[i].loglik == b.fits[i].loglik);
    CHECK(a.provenance[i].lambda == b.provenance[i].lambda);
  }
}

TEST_CASE("empty collections raise a diagnostic error") {
  // constant-zero responses: the grid itself is uninformative
  Dataset ds;
  ds.X = Matrix::Random(30, 3);
  ds.Y = Matrix::Zero(30, 2);
  CollectionConfig cfg;
  cfg.K_set = {1};
  CHECK_THROWS(build_collection(ds, cfg));
}

TEST_CASE("true shared rank attains the smallest test divergence on the paper setting") {
  int wins = 0;
  const int runs = 20;
  for (std::uint64_t seed = 1; seed <= runs; ++seed) {
    SimConfig sc = setting_p_lt_n();
    sc.seed = seed;
    const SimData sim = generate(sc);
    CollectionConfig cfg;
    cfg.K_set = {2};
    cfg.G = 8;
    cfg.r_min = 1;
    cfg.r_max = 4;
    cfg.rank_mode = RankMode::Shared;
    cfg.lasso.n_restarts = 2;
    cfg.seed = derive_seed(seed, 17);
    cfg.lasso.seed = derive_seed(seed, 18);
    Collection coll;
    try {
      coll = build_collection(sim.train, cfg);
    } catch (const DegenerateFit&) {
      continue;
    }
    JklConfig jcfg;
    jcfg.mc_samples = 1000;
    jcfg.seed = derive_seed(seed, 19);
    const Matrix X_eval = sim.test.X.topRows(100);
    double best = 1e300;
    std::vector<int> best_rank;
    for (const FittedModel& fit : coll.fits) {
      const double kl = kl_mc(sim.truth.model, fit.model, X_eval, jcfg).value;
      if (kl < best) {
        best = kl;
        best_rank = fit.index.R;
      }
    }
    if (best_rank == std::vector<int>{3, 3}) ++wins;
  }
  CHECK(wins >= 16);
}
