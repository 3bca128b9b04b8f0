#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "rrmix/types.hpp"

namespace rrmix {

// Two-component (by default) sparse low-rank mixture regression generator:
// X rows iid N(0, rho I); per cluster the active q x J_size block of beta_k
// is b_k * (B0 B1)^T with B0 (J_size x R(k)) and B1 (R(k) x q) iid N(0,1);
// noise is N(0, I_q).
struct SimConfig {
  int n = 200;
  int p = 10;
  int q = 10;
  int J_size = 6;
  std::vector<int> R = {3, 3};
  double rho = 0.01;
  std::vector<double> b = {3.0, -3.0};
  int K = 2;
  std::vector<double> pi;  // empty = uniform
  std::uint64_t seed = 0;
  int n_test = -1;         // -1 = same as n

  void validate() const;
};

struct TrueModel {
  MixtureRegressionModel model;
  std::vector<int> J;
  std::vector<int> R;
};

struct SimData {
  Dataset train;
  Dataset test;
  TrueModel truth;
};

SimData generate(const SimConfig& cfg);

// The paper's two reported settings.
SimConfig setting_p_gt_n();  // n=50,  |J|=6, p=100, q=10, R=[3,3], rho=0.1,  b=[3,-3]
SimConfig setting_p_lt_n();  // n=200, |J|=6, p=10,  q=10, R=[3,3], rho=0.01, b=[3,-3]

}  // namespace rrmix
