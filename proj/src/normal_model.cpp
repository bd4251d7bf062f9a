#include "histprior/normal_model.hpp"

#include <stdexcept>

namespace histprior {
namespace {

NormalDist precision_weighted(const std::vector<NormalStudy>& studies,
                              const std::vector<double>& precisions) {
  double total = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < studies.size(); ++i) {
    total += precisions[i];
    weighted += precisions[i] * studies[i].estimate;
  }
  if (!(total > 0.0)) throw std::domain_error("posterior is improper: no study carries weight");
  return NormalDist(weighted / total, 1.0 / total);
}

}  // namespace

NormalStudy::NormalStudy(double estimate, double variance) : estimate(estimate), variance(variance) {
  if (!(variance > 0.0)) throw std::domain_error("NormalStudy: variance must be positive");
}

NormalDist normal_power_posterior(const std::vector<NormalStudy>& studies, const WeightVector& delta) {
  if (static_cast<int>(studies.size()) != delta.size()) {
    throw std::domain_error("weight vector length does not match studies");
  }
  std::vector<double> precisions(studies.size());
  for (std::size_t i = 0; i < studies.size(); ++i) precisions[i] = delta.delta[i] / studies[i].variance;
  return precision_weighted(studies, precisions);
}

NormalDist bias_model_posterior(const std::vector<NormalStudy>& studies,
                                const std::vector<double>& tau_sq) {
  if (studies.size() != tau_sq.size()) throw std::domain_error("tau_sq length does not match studies");
  std::vector<double> precisions(studies.size());
  for (std::size_t i = 0; i < studies.size(); ++i) {
    if (!(tau_sq[i] >= 0.0)) throw std::domain_error("bias variances must be non-negative");
    precisions[i] = 1.0 / (studies[i].variance + tau_sq[i]);
  }
  return precision_weighted(studies, precisions);
}

NormalDist normal_map_prior(const std::vector<NormalStudy>& studies, double tau_sq) {
  if (!(tau_sq >= 0.0)) throw std::domain_error("heterogeneity variance must be non-negative");
  const NormalDist pooled =
      bias_model_posterior(studies, std::vector<double>(studies.size(), tau_sq));
  return NormalDist(pooled.mean, pooled.variance + tau_sq);
}

}  // namespace histprior
