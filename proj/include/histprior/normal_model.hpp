#pragma once

#include <vector>

#include "histprior/data_model.hpp"

namespace histprior {

/// A historical estimate with known sampling variance. Flat prior on the
/// target parameter throughout this module.
struct NormalStudy {
  double estimate = 0.0;
  double variance = 1.0;

  NormalStudy() = default;
  NormalStudy(double estimate, double variance);
};

/// Fixed-weight power prior: each study's variance divided by its weight.
/// Zero-weight studies are dropped; throws std::domain_error if all are zero.
NormalDist normal_power_posterior(const std::vector<NormalStudy>& studies, const WeightVector& delta);

/// Potential-bias model: each study's variance inflated by its own bias
/// variance tau_sq[i].
NormalDist bias_model_posterior(const std::vector<NormalStudy>& studies,
                                const std::vector<double>& tau_sq);

/// Normal meta-analytic predictive prior with a flat prior on the mean:
/// pooled estimate under common heterogeneity tau_sq, plus tau_sq.
NormalDist normal_map_prior(const std::vector<NormalStudy>& studies, double tau_sq);

}  // namespace histprior
