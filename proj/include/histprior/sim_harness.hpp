#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "histprior/data_model.hpp"
#include "histprior/oc_engine.hpp"

namespace histprior {

/// Random-effects generator for historical sets plus the new trial's design.
struct ScenarioSpec {
  int n_hist_studies = 5;
  int hist_size = 50;
  double base_prob = 0.65;
  double re_sd = 0.1;
  int n_star = 200;
  int n_T = 200;
  int reps = 50;
  std::uint64_t seed = 20240601;
  double effect = 0.12;
  double threshold = 0.975;

  /// Five historical studies of 50, sd 0.1; n_star = n_T = 200.
  static ScenarioSpec scenario1();
  /// Five historical studies of 100, sd 0.05; n_star = 75, n_T = 200.
  static ScenarioSpec scenario2();

  TrialDesign design() const;
  void validate() const;
};

nlohmann::json to_json(const ScenarioSpec& spec);
/// Missing keys keep their scenario-1 defaults; "scenario": 1 or 2 selects a preset base.
ScenarioSpec scenario_spec_from_json(const nlohmann::json& j);

/// Study i of replicate r draws from stream (seed, r * H + i).
HistoricalSet sample_historical(const ScenarioSpec& spec, int replicate);

struct AggregatedOC {
  std::vector<OCRow> rows;   // means over replicates; rejection_ratio is the geometric mean
  int replicates = 0;        // replicates that contributed
  int skipped = 0;           // replicates dropped after a numerical failure
  int zero_ratio_floors = 0; // zero rejection ratios floored at 1e-12
};

/// One replicate's curve for one method, or empty if it failed numerically.
using ReplicateCurves = std::vector<std::vector<OCRow>>;

/// Curves for every method on the historical set of one replicate.
ReplicateCurves replicate_curves(const ScenarioSpec& spec, const std::vector<PriorMethod>& methods,
                                 const std::vector<double>& thetas, int replicate);

/// Mean over curves in the given order; empty curves count as skipped.
AggregatedOC aggregate_oc(const std::vector<std::vector<OCRow>>& curves);

/// Runs every replicate (on up to `threads` workers; 0 = hardware concurrency)
/// and aggregates per method, keyed by PriorMethod::label().
std::map<std::string, AggregatedOC> run_scenario(const ScenarioSpec& spec,
                                                 const std::vector<PriorMethod>& methods,
                                                 const std::vector<double>& thetas, int threads = 1);

/// none, the three EB kinds, fb-copula at rho 0 and 0.5, fb-pooled, map, map-robust.
std::vector<PriorMethod> default_methods();

nlohmann::json scenario_report(const ScenarioSpec& spec, const std::vector<double>& thetas,
                               const std::map<std::string, AggregatedOC>& results);

/// Writes <label>.csv per method and report.json into `dir` (created if needed).
void write_scenario_outputs(const std::filesystem::path& dir, const ScenarioSpec& spec,
                            const std::vector<double>& thetas,
                            const std::map<std::string, AggregatedOC>& results);

}  // namespace histprior
