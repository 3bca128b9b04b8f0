#pragma once

#include "rrmix/types.hpp"

namespace rrmix {

// log of the mixture conditional density s(y|x) = sum_k pi_k N_q(y; beta_k x, Sigma_k),
// evaluated through the diagonal-Gaussian closed form with log-sum-exp
// stabilization. Component terms are summed in sorted order so the value is
// exactly invariant under permutations of the component slots.
double log_mixture_density(const MixtureRegressionModel& model, const Eigen::Ref<const Vector>& x,
                           const Eigen::Ref<const Vector>& y);

double mixture_density(const MixtureRegressionModel& model, const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& y);

// sum_i log s(y_i|x_i), sequential accumulation.
double log_likelihood(const MixtureRegressionModel& model, const Dataset& data);

}  // namespace rrmix
