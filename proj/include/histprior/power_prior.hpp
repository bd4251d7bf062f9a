#pragma once

#include <vector>

#include "histprior/data_model.hpp"
#include "histprior/random.hpp"

namespace histprior {

/// Prior on the weight vector for the fully Bayesian power prior: uniform
/// marginals joined by a Gaussian copula with equicorrelation `rho`.
/// rho == 1 means one shared weight (equivalent to pooling the studies).
struct CopulaSpec {
  double rho = 0.0;
  int draws = 1000;

  CopulaSpec() = default;
  CopulaSpec(double rho, int draws);
};

/// Be(1 + sum d_i x_i, 1 + sum d_i (n_i - x_i)): the weighted historical
/// likelihood applied to a flat initial prior.
BetaComponent conditional_power_prior(const HistoricalSet& hist, const WeightVector& delta);

/// Log marginal likelihood of the weights given the new study, i.e. the
/// beta-binomial log pmf of the new data under the conditional power prior.
double delta_log_marginal_likelihood(const HistoricalSet& hist, const WeightVector& delta,
                                     const StudyResult& current);

/// Weights maximising the marginal likelihood jointly over [0,1]^H.
WeightVector eb_combined(const HistoricalSet& hist, const StudyResult& current);

/// Each weight maximised against its own study alone.
WeightVector eb_separate(const HistoricalSet& hist, const StudyResult& current);

/// One weight maximised against the pooled study, shared by every study.
WeightVector eb_pooled(const HistoricalSet& hist, const StudyResult& current);

/// Draws `spec.draws` weight vectors from the copula prior.
std::vector<WeightVector> sample_weight_prior(int num_studies, const CopulaSpec& spec,
                                              SeededStream& stream);

/// Equal-weight mixture of the conditional power priors at the given weights
/// (Rao-Blackwellised marginal prior).
BetaMixture power_prior_mixture(const HistoricalSet& hist, const std::vector<WeightVector>& draws);

/// Fully Bayesian marginal power prior of theta.
BetaMixture fb_power_prior(const HistoricalSet& hist, const CopulaSpec& spec, SeededStream& stream);

}  // namespace histprior
