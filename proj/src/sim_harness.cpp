#include "histprior/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "histprior/random.hpp"
#include "histprior/serialization.hpp"

namespace histprior {
namespace {

constexpr double kProbClamp = 1e-6;
constexpr double kRatioFloor = 1e-12;

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

ScenarioSpec ScenarioSpec::scenario1() { return {}; }

ScenarioSpec ScenarioSpec::scenario2() {
  ScenarioSpec s;
  s.hist_size = 100;
  s.re_sd = 0.05;
  s.n_star = 75;
  return s;
}

TrialDesign ScenarioSpec::design() const {
  TrialDesign d;
  d.n_star = n_star;
  d.n_T = n_T;
  d.effect = effect;
  d.threshold = threshold;
  return d;
}

void ScenarioSpec::validate() const {
  if (n_hist_studies < 1 || hist_size < 1) throw std::domain_error("scenario: need at least one non-empty historical study");
  if (!(base_prob > 0.0 && base_prob < 1.0)) throw std::domain_error("scenario: base_prob must lie in (0,1)");
  if (!(re_sd > 0.0) || !std::isfinite(re_sd)) throw std::domain_error("scenario: re_sd must be positive");
  if (reps < 1) throw std::domain_error("scenario: reps must be positive");
  design().validate();
}

nlohmann::json to_json(const ScenarioSpec& spec) {
  return {{"n_hist_studies", spec.n_hist_studies},
          {"hist_size", spec.hist_size},
          {"base_prob", spec.base_prob},
          {"re_sd", spec.re_sd},
          {"n_star", spec.n_star},
          {"n_T", spec.n_T},
          {"reps", spec.reps},
          {"seed", spec.seed},
          {"effect", spec.effect},
          {"threshold", spec.threshold}};
}

ScenarioSpec scenario_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("scenario spec must be a JSON object");
  ScenarioSpec spec;
  if (j.contains("scenario")) {
    const int which = j.at("scenario").get<int>();
    if (which == 1) {
      spec = ScenarioSpec::scenario1();
    } else if (which == 2) {
      spec = ScenarioSpec::scenario2();
    } else {
      throw std::invalid_argument("scenario must be 1 or 2");
    }
  }
  read_if(j, "n_hist_studies", spec.n_hist_studies);
  read_if(j, "hist_size", spec.hist_size);
  read_if(j, "base_prob", spec.base_prob);
  read_if(j, "re_sd", spec.re_sd);
  read_if(j, "n_star", spec.n_star);
  read_if(j, "n_T", spec.n_T);
  read_if(j, "reps", spec.reps);
  read_if(j, "seed", spec.seed);
  read_if(j, "effect", spec.effect);
  read_if(j, "threshold", spec.threshold);
  spec.validate();
  return spec;
}

HistoricalSet sample_historical(const ScenarioSpec& spec, int replicate) {
  spec.validate();
  if (replicate < 0) throw std::domain_error("sample_historical: replicate must be non-negative");
  const auto h = static_cast<std::uint64_t>(spec.n_hist_studies);
  std::vector<StudyResult> studies;
  studies.reserve(h);
  for (std::uint64_t i = 0; i < h; ++i) {
    SeededStream stream(spec.seed, static_cast<std::uint64_t>(replicate) * h + i);
    const double p =
        std::clamp(spec.base_prob + spec.re_sd * stream.standard_normal(), kProbClamp, 1.0 - kProbClamp);
    studies.emplace_back(stream.binomial(spec.hist_size, p), spec.hist_size);
  }
  return HistoricalSet(std::move(studies));
}

ReplicateCurves replicate_curves(const ScenarioSpec& spec, const std::vector<PriorMethod>& methods,
                                 const std::vector<double>& thetas, int replicate) {
  const HistoricalSet hist = sample_historical(spec, replicate);
  const TrialDesign design = spec.design();
  std::optional<BetaMixture> map_cache;
  ReplicateCurves curves;
  curves.reserve(methods.size());
  for (const auto& method : methods) {
    try {
      const auto table = tabulate_control(method, hist, design,
                                          prior_stream(spec.seed, static_cast<std::uint64_t>(replicate)),
                                          &map_cache);
      curves.push_back(oc_curve(table, design, thetas));
    } catch (const NumericalError&) {
      curves.emplace_back();
    }
  }
  return curves;
}

AggregatedOC aggregate_oc(const std::vector<std::vector<OCRow>>& curves) {
  AggregatedOC agg;
  std::vector<const std::vector<OCRow>*> used;
  for (const auto& c : curves) {
    if (c.empty()) {
      ++agg.skipped;
    } else {
      if (!used.empty() && c.size() != used.front()->size()) {
        throw std::domain_error("aggregate_oc: curves have different lengths");
      }
      used.push_back(&c);
    }
  }
  agg.replicates = static_cast<int>(used.size());
  if (used.empty()) return agg;

  const double inv = 1.0 / static_cast<double>(used.size());
  const std::size_t points = used.front()->size();
  agg.rows.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    CompensatedSum pss, mse, power, type1, log_ratio;
    OCRow& out = agg.rows[k];
    out.theta = (*used.front())[k].theta;
    // Logs are taken relative to the first ratio so identical replicates
    // reproduce it exactly.
    double reference = std::numeric_limits<double>::quiet_NaN();
    bool infinite = false, undefined = false;
    for (const auto* curve : used) {
      const OCRow& r = (*curve)[k];
      pss.add(r.pss);
      mse.add(r.mse);
      power.add(r.power);
      type1.add(r.type1);
      out.power_skipped = out.power_skipped || r.power_skipped;
      double ratio = r.rejection_ratio;
      if (std::isnan(ratio)) {
        undefined = true;
        continue;
      }
      if (std::isinf(ratio)) {
        infinite = true;
        continue;
      }
      if (ratio <= 0.0) {
        ratio = kRatioFloor;
        ++agg.zero_ratio_floors;
      }
      if (std::isnan(reference)) reference = ratio;
      log_ratio.add(std::log(ratio / reference));
    }
    out.pss = pss.value() * inv;
    out.mse = mse.value() * inv;
    out.power = power.value() * inv;
    out.type1 = type1.value() * inv;
    if (undefined) {
      out.rejection_ratio = std::numeric_limits<double>::quiet_NaN();
    } else if (infinite) {
      out.rejection_ratio = std::numeric_limits<double>::infinity();
    } else {
      out.rejection_ratio = reference * std::exp(log_ratio.value() * inv);
    }
  }
  return agg;
}

std::map<std::string, AggregatedOC> run_scenario(const ScenarioSpec& spec,
                                                 const std::vector<PriorMethod>& methods,
                                                 const std::vector<double>& thetas, int threads) {
  spec.validate();
  for (const auto& m : methods) m.validate();
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, spec.reps);

  std::vector<ReplicateCurves> per_replicate(static_cast<std::size_t>(spec.reps));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int r = next++; r < spec.reps; r = next++) {
      try {
        per_replicate[r] = replicate_curves(spec, methods, thetas, r);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::map<std::string, AggregatedOC> results;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<std::vector<OCRow>> curves;
    curves.reserve(per_replicate.size());
    for (auto& rep : per_replicate) curves.push_back(std::move(rep[m]));
    results[methods[m].label()] = aggregate_oc(curves);
  }
  return results;
}

std::vector<PriorMethod> default_methods() {
  return {PriorMethod::of(PriorKind::NoHistory),     PriorMethod::of(PriorKind::EBCombined),
          PriorMethod::of(PriorKind::EBSeparate),    PriorMethod::of(PriorKind::EBPooled),
          PriorMethod::of(PriorKind::FBCopula, 0.0), PriorMethod::of(PriorKind::FBCopula, 0.5),
          PriorMethod::of(PriorKind::FBPooled),      PriorMethod::of(PriorKind::MAP),
          PriorMethod::of(PriorKind::MAPRobust)};
}

nlohmann::json scenario_report(const ScenarioSpec& spec, const std::vector<double>& thetas,
                               const std::map<std::string, AggregatedOC>& results) {
  nlohmann::json methods = nlohmann::json::object();
  for (const auto& [label, agg] : results) {
    methods[label] = {{"replicates", agg.replicates},
                      {"skipped", agg.skipped},
                      {"zero_ratio_floors", agg.zero_ratio_floors},
                      {"rows", oc_rows_to_json(agg.rows)}};
  }
  return {{"seed", spec.seed}, {"spec", to_json(spec)}, {"thetas", thetas}, {"methods", methods}};
}

void write_scenario_outputs(const std::filesystem::path& dir, const ScenarioSpec& spec,
                            const std::vector<double>& thetas,
                            const std::map<std::string, AggregatedOC>& results) {
  std::filesystem::create_directories(dir);
  for (const auto& [label, agg] : results) {
    std::ofstream out(dir / (label + ".csv"), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / (label + ".csv")).string());
    write_oc_csv(out, agg.rows,
                 {"method " + label, "seed " + std::to_string(spec.seed),
                  "replicates " + std::to_string(agg.replicates), "skipped " + std::to_string(agg.skipped)});
  }
  std::ofstream report(dir / "report.json", std::ios::binary);
  if (!report) throw std::runtime_error("cannot write " + (dir / "report.json").string());
  report << scenario_report(spec, thetas, results).dump(2) << '\n';
}

}  // namespace histprior
