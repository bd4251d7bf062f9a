#pragma once

#include <string>
#include <vector>

namespace histprior {

/// Events out of a sample size. A size of 0 stands for "no data" and is
/// accepted here (posterior updates with it are the identity); historical
/// sets require size >= 1.
struct StudyResult {
  int events = 0;
  int size = 0;

  StudyResult() = default;
  StudyResult(int events, int size);

  double proportion() const { return size > 0 ? static_cast<double>(events) / size : 0.0; }
  bool operator==(const StudyResult&) const = default;
};

struct HistoricalSet {
  std::vector<StudyResult> studies;
  std::vector<std::string> labels;  // empty, or one per study

  HistoricalSet() = default;
  explicit HistoricalSet(std::vector<StudyResult> studies, std::vector<std::string> labels = {});

  int size() const { return static_cast<int>(studies.size()); }
  /// Sum of events and of sizes over all studies.
  StudyResult pooled() const;
};

struct WeightVector {
  std::vector<double> delta;

  WeightVector() = default;
  explicit WeightVector(std::vector<double> delta);

  int size() const { return static_cast<int>(delta.size()); }
};

struct BetaComponent {
  double alpha = 1.0;
  double beta = 1.0;

  BetaComponent() = default;
  BetaComponent(double alpha, double beta);

  double mean() const { return alpha / (alpha + beta); }
  double variance() const;
  double log_density(double theta) const;
  double density(double theta) const;
  bool operator==(const BetaComponent&) const = default;
};

/// Finite mixture of beta densities. Every prior and posterior for the
/// control-arm probability is carried in this form.
class BetaMixture {
 public:
  BetaMixture() : weights_{1.0}, components_{BetaComponent{}} {}
  BetaMixture(std::vector<double> weights, std::vector<BetaComponent> components);
  explicit BetaMixture(BetaComponent single) : weights_{1.0}, components_{single} {}

  /// Builds a mixture from unnormalised log-weights (max-subtracted in place).
  static BetaMixture from_log_weights(std::vector<double> log_weights,
                                      std::vector<BetaComponent> components);

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<BetaComponent>& components() const { return components_; }
  std::size_t size() const { return components_.size(); }

 private:
  std::vector<double> weights_;
  std::vector<BetaComponent> components_;
};

struct NormalDist {
  double mean = 0.0;
  double variance = 1.0;

  NormalDist() = default;
  NormalDist(double mean, double variance);
};

/// Sum_j w_j Be(theta; a_j, b_j). Throws std::domain_error outside (0,1).
double mixture_density(const BetaMixture& m, double theta);

/// Conjugate update of every component, with weights reweighted by each
/// component's beta-binomial marginal likelihood of the data.
BetaMixture mixture_posterior(const BetaMixture& m, const StudyResult& data);

double mixture_mean(const BetaMixture& m);
double mixture_variance(const BetaMixture& m);

}  // namespace histprior
