#include "histprior/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "histprior/numerics.hpp"

namespace histprior {

StudyResult::StudyResult(int events, int size) : events(events), size(size) {
  if (size < 0 || events < 0 || events > size) {
    throw std::domain_error("StudyResult: need 0 <= events <= size");
  }
}

HistoricalSet::HistoricalSet(std::vector<StudyResult> studies, std::vector<std::string> labels)
    : studies(std::move(studies)), labels(std::move(labels)) {
  if (this->studies.empty()) throw std::domain_error("HistoricalSet: need at least one study");
  for (const auto& s : this->studies) {
    if (s.size < 1 || s.events < 0 || s.events > s.size) {
      throw std::domain_error("HistoricalSet: each study needs 0 <= events <= size, size >= 1");
    }
  }
  if (!this->labels.empty() && this->labels.size() != this->studies.size()) {
    throw std::domain_error("HistoricalSet: label count does not match study count");
  }
}

StudyResult HistoricalSet::pooled() const {
  StudyResult total;
  for (const auto& s : studies) {
    total.events += s.events;
    total.size += s.size;
  }
  return total;
}

WeightVector::WeightVector(std::vector<double> delta) : delta(std::move(delta)) {
  for (double d : this->delta) {
    if (!(d >= 0.0 && d <= 1.0)) throw std::domain_error("WeightVector: weights must lie in [0,1]");
  }
}

BetaComponent::BetaComponent(double alpha, double beta) : alpha(alpha), beta(beta) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw std::domain_error("BetaComponent: parameters must be positive and finite");
  }
}

double BetaComponent::variance() const {
  const double s = alpha + beta;
  return alpha * beta / (s * s * (s + 1.0));
}

double BetaComponent::log_density(double theta) const {
  return (alpha - 1.0) * std::log(theta) + (beta - 1.0) * std::log1p(-theta) -
         log_beta(alpha, beta);
}

double BetaComponent::density(double theta) const { return std::exp(log_density(theta)); }

BetaMixture::BetaMixture(std::vector<double> weights, std::vector<BetaComponent> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (weights_.empty() || weights_.size() != components_.size()) {
    throw std::domain_error("BetaMixture: need equal, non-zero numbers of weights and components");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::domain_error("BetaMixture: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::domain_error("BetaMixture: weights must sum to 1");
}

BetaMixture BetaMixture::from_log_weights(std::vector<double> log_weights,
                                          std::vector<BetaComponent> components) {
  if (log_weights.empty() || log_weights.size() != components.size()) {
    throw std::domain_error("BetaMixture: need equal, non-zero numbers of weights and components");
  }
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(top)) throw std::domain_error("BetaMixture: no finite log-weight");
  std::vector<double> weights;
  std::vector<BetaComponent> kept;
  double total = 0.0;
  for (std::size_t j = 0; j < log_weights.size(); ++j) {
    const double w = std::exp(log_weights[j] - top);
    if (w > 0.0) {
      weights.push_back(w);
      kept.push_back(components[j]);
      total += w;
    }
  }
  for (auto& w : weights) w /= total;
  BetaMixture out;
  out.weights_ = std::move(weights);
  out.components_ = std::move(kept);
  return out;
}

NormalDist::NormalDist(double mean, double variance) : mean(mean), variance(variance) {
  if (!(variance > 0.0)) throw std::domain_error("NormalDist: variance must be positive");
}

double mixture_density(const BetaMixture& m, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::domain_error("mixture_density: theta must lie in (0,1)");
  double sum = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) sum += m.weights()[j] * m.components()[j].density(theta);
  return sum;
}

BetaMixture mixture_posterior(const BetaMixture& m, const StudyResult& data) {
  if (data.size == 0) return m;
  std::vector<double> log_weights(m.size());
  std::vector<BetaComponent> updated(m.size());
  const int x = data.events;
  const int n = data.size;
  for (std::size_t j = 0; j < m.size(); ++j) {
    const auto& c = m.components()[j];
    log_weights[j] = std::log(m.weights()[j]) + log_beta_binomial(x, n, c.alpha, c.beta);
    updated[j] = BetaComponent(c.alpha + x, c.beta + (n - x));
  }
  return BetaMixture::from_log_weights(std::move(log_weights), std::move(updated));
}

double mixture_mean(const BetaMixture& m) {
  double mean = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) mean += m.weights()[j] * m.components()[j].mean();
  return mean;
}

double mixture_variance(const BetaMixture& m) {
  const double mean = mixture_mean(m);
  double second = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    const auto& c = m.components()[j];
    const double mu = c.mean();
    second += m.weights()[j] * (c.variance() + mu * mu);
  }
  return second - mean * mean;
}

}  // namespace histprior
