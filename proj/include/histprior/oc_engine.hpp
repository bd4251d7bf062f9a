#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "histprior/data_model.hpp"
#include "histprior/map_prior.hpp"
#include "histprior/numerics.hpp"
#include "histprior/random.hpp"

namespace histprior {

enum class PriorKind {
  NoHistory,
  EBCombined,
  EBSeparate,
  EBPooled,
  FBCopula,
  FBPooled,
  MAP,
  MAPRobust,
};

/// How the control-arm prior is built from the historical studies.
struct PriorMethod {
  PriorKind kind = PriorKind::NoHistory;
  double rho = 0.0;           // FBCopula
  int draws = 1000;           // FB kinds
  MapConfig map;              // MAP kinds
  int max_components = 3;     // MAP kinds
  double vague_weight = 0.1;  // MAPRobust

  static PriorMethod no_history() { return {}; }
  static PriorMethod of(PriorKind kind, double rho = 0.0);
  /// Accepts the names printed by `name()`: none, eb-combined, eb-separate,
  /// eb-pooled, fb-copula, fb-pooled, map, map-robust.
  static PriorMethod parse(const std::string& name, double rho = 0.0);

  std::string name() const;
  /// name() plus the copula correlation for fb-copula, e.g. "fb-copula-0.5".
  std::string label() const;
  /// EB kinds: the prior depends on the current control data.
  bool adaptive() const;
  void validate() const;
};

struct TrialDesign {
  int n_star = 200;
  int n_T = 200;
  double effect = 0.12;
  double threshold = 0.975;

  void validate() const;
};

struct OCRow {
  double theta = 0.0;
  double pss = 0.0;
  double mse = 0.0;
  double power = 0.0;  // NaN when theta + effect > 1
  double type1 = 0.0;
  double rejection_ratio = 0.0;  // +inf when type1 == 0
  bool power_skipped = false;
};

struct PowerRow {
  double theta = 0.0;
  double power = 0.0;
  double type1 = 0.0;
  bool power_skipped = false;
};

/// Random stream used for prior construction in simulation replicate
/// `replicate`; the CLI's single-dataset commands use replicate 0.
SeededStream prior_stream(std::uint64_t seed, std::uint64_t replicate);

/// Prior implied by `method`. EB kinds use `current` to estimate weights;
/// other kinds ignore it. `map_cache` (optional) memoises the MAP fit.
BetaMixture build_prior(const PriorMethod& method, const HistoricalSet& hist,
                        const std::optional<StudyResult>& current, SeededStream stream,
                        std::optional<BetaMixture>* map_cache = nullptr);

/// EB weights for an EB kind.
WeightVector eb_weights(PriorKind kind, const HistoricalSet& hist, const StudyResult& current);

/// sum_j w_j (a_j + b_j) - 2: pseudo-observations beyond the flat initial prior.
double prior_sample_size(const BetaMixture& m);

/// Quadrature rule and treatment-arm survival table shared by every decision
/// with a given treatment size. The treatment posterior is Be(1+x_T, 1+n_T-x_T).
class DecisionIntegrator {
 public:
  explicit DecisionIntegrator(int n_T);

  int n_T() const { return n_T_; }
  const QuadratureRule& rule() const { return rule_; }
  /// log t and log(1 - t) at each node, the latter from exact complements.
  const std::vector<double>& log_nodes() const { return log_nodes_; }
  const std::vector<double>& log1m_nodes() const { return log1m_nodes_; }

  /// Quadrature weights times the normalised control density at each node,
  /// given the log density (unnormalised) at each node.
  std::vector<double> node_masses(const std::vector<double>& log_density) const;
  std::vector<double> node_masses(const BetaMixture& control) const;
  /// Log mixture density at each node.
  std::vector<double> log_density(const BetaMixture& m) const;

  /// P(theta_T > theta_control | x_T) for node masses from node_masses().
  double prob_treatment_better(const std::vector<double>& masses, int x_T) const;

  /// Smallest x_T with P > threshold (binary search), or n_T + 1 if none.
  int threshold(const std::vector<double>& masses, double threshold) const;
  /// Same, by scanning every x_T.
  int threshold_scan(const std::vector<double>& masses, double threshold) const;

 private:
  int n_T_;
  QuadratureRule rule_;
  std::vector<double> log_nodes_, log1m_nodes_;
  std::vector<double> survival_;  // [x_T][node]
};

double prob_treatment_better(const BetaMixture& control, int x_T, int n_T);
bool decision(const BetaMixture& control, int x_T, const TrialDesign& design);

/// Posterior summaries of the control arm for every possible x_star.
struct ControlPosteriorTable {
  std::vector<double> mean;
  std::vector<double> pss;
  std::vector<int> threshold;  // smallest significant x_T
};

ControlPosteriorTable tabulate_control(const PriorMethod& method, const HistoricalSet& hist,
                                       const TrialDesign& design, SeededStream stream,
                                       std::optional<BetaMixture>* map_cache = nullptr);

/// Prior built from `prior` directly (non-adaptive).
ControlPosteriorTable tabulate_control(const BetaMixture& prior, const TrialDesign& design);

std::vector<OCRow> oc_curve(const ControlPosteriorTable& table, const TrialDesign& design,
                            const std::vector<double>& thetas);

std::vector<OCRow> oc_curve(const PriorMethod& method, const HistoricalSet& hist,
                            const TrialDesign& design, const std::vector<double>& thetas,
                            std::uint64_t seed = 0);

std::vector<std::pair<double, double>> mse_curve(const PriorMethod& method, const HistoricalSet& hist,
                                                 const TrialDesign& design,
                                                 const std::vector<double>& thetas,
                                                 std::uint64_t seed = 0);

std::vector<PowerRow> power_type1_curve(const PriorMethod& method, const HistoricalSet& hist,
                                        const TrialDesign& design, const std::vector<double>& thetas,
                                        std::uint64_t seed = 0);

/// power / type1 per row; +inf where type1 == 0, NaN where power was skipped.
std::vector<std::pair<double, double>> rejection_ratio_curve(const std::vector<PowerRow>& rows);

/// lo, lo + step, ..., up to hi (inclusive, with rounding slack).
std::vector<double> theta_grid(double lo, double hi, double step);
std::vector<double> default_theta_grid();

/// CSV with header theta,pss,mse,power,type1,rejection_ratio; 12 significant
/// digits; `comments` become leading '#' lines.
void write_oc_csv(std::ostream& out, const std::vector<OCRow>& rows,
                  const std::vector<std::string>& comments = {});
nlohmann::json oc_rows_to_json(const std::vector<OCRow>& rows);

/// "%.12g" in the C locale; "nan", "inf".
std::string format_number(double value);

}  // namespace histprior
