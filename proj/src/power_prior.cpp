#include "histprior/power_prior.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "histprior/numerics.hpp"

namespace histprior {
namespace {

// Ties along flat ridges go to the larger weight.
constexpr double kTieBreak = 1e-12;

BetaComponent weighted_counts(const HistoricalSet& hist, std::span<const double> delta) {
  double a = 1.0, b = 1.0;
  for (std::size_t i = 0; i < hist.studies.size(); ++i) {
    const auto& s = hist.studies[i];
    a += delta[i] * s.events;
    b += delta[i] * (s.size - s.events);
  }
  return BetaComponent(a, b);
}

double eb_objective(const HistoricalSet& hist, std::span<const double> delta,
                    const StudyResult& current) {
  const BetaComponent prior = weighted_counts(hist, delta);
  const double sum = std::accumulate(delta.begin(), delta.end(), 0.0);
  return log_beta_binomial(current.events, current.size, prior.alpha, prior.beta) + kTieBreak * sum;
}

void check_current(const StudyResult& current) {
  if (current.events < 0 || current.events > current.size) {
    throw std::domain_error("current study needs 0 <= events <= size");
  }
}

// Studies with equal proportions enter the objective only through their
// weighted total size, so the optimum is a ridge. Within each such group keep
// that total and move weight to the smallest studies, which maximises the sum
// of weights; studies of equal size share equally.
std::vector<double> resolve_ties(const HistoricalSet& hist, std::vector<double> delta) {
  const auto& st = hist.studies;
  const std::size_t h = st.size();
  std::vector<bool> done(h, false);
  for (std::size_t i = 0; i < h; ++i) {
    if (done[i]) continue;
    std::vector<std::size_t> group;
    for (std::size_t j = i; j < h; ++j) {
      if (!done[j] && static_cast<long long>(st[i].events) * st[j].size ==
                          static_cast<long long>(st[j].events) * st[i].size) {
        group.push_back(j);
        done[j] = true;
      }
    }
    if (group.size() < 2) continue;
    double remaining = 0.0;
    for (std::size_t j : group) remaining += delta[j] * st[j].size;
    std::stable_sort(group.begin(), group.end(),
                     [&](std::size_t a, std::size_t b) { return st[a].size < st[b].size; });
    for (std::size_t k = 0; k < group.size();) {
      std::size_t end = k;
      while (end < group.size() && st[group[end]].size == st[group[k]].size) ++end;
      const double tier = static_cast<double>(end - k) * st[group[k]].size;
      const double w = std::clamp(remaining / tier, 0.0, 1.0);
      for (std::size_t m = k; m < end; ++m) delta[group[m]] = w;
      remaining = std::max(remaining - w * tier, 0.0);
      k = end;
    }
  }
  return delta;
}

double single_weight(const HistoricalSet& hist, const StudyResult& current) {
  const auto best = maximize_box(
      [&](std::span<const double> d) { return eb_objective(hist, d, current); }, 1,
      {{0.0}, {1.0}, {0.5}});
  return best.argmax[0];
}

}  // namespace

CopulaSpec::CopulaSpec(double rho, int draws) : rho(rho), draws(draws) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::domain_error("CopulaSpec: rho must lie in [0,1]");
  if (draws < 1) throw std::domain_error("CopulaSpec: need at least one draw");
}

BetaComponent conditional_power_prior(const HistoricalSet& hist, const WeightVector& delta) {
  if (delta.size() != hist.size()) throw std::domain_error("weight vector length does not match studies");
  return weighted_counts(hist, delta.delta);
}

double delta_log_marginal_likelihood(const HistoricalSet& hist, const WeightVector& delta,
                                     const StudyResult& current) {
  check_current(current);
  const BetaComponent prior = conditional_power_prior(hist, delta);
  return log_beta_binomial(current.events, current.size, prior.alpha, prior.beta);
}

WeightVector eb_combined(const HistoricalSet& hist, const StudyResult& current) {
  check_current(current);
  const int h = hist.size();
  const auto best = maximize_box(
      [&](std::span<const double> d) { return eb_objective(hist, d, current); }, h,
      cube_vertex_starts(h));
  return WeightVector(resolve_ties(hist, best.argmax));
}

WeightVector eb_separate(const HistoricalSet& hist, const StudyResult& current) {
  check_current(current);
  std::vector<double> delta;
  delta.reserve(hist.studies.size());
  for (const auto& s : hist.studies) delta.push_back(single_weight(HistoricalSet({s}), current));
  return WeightVector(std::move(delta));
}

WeightVector eb_pooled(const HistoricalSet& hist, const StudyResult& current) {
  check_current(current);
  const double shared = single_weight(HistoricalSet({hist.pooled()}), current);
  return WeightVector(std::vector<double>(hist.studies.size(), shared));
}

std::vector<WeightVector> sample_weight_prior(int num_studies, const CopulaSpec& spec,
                                              SeededStream& stream) {
  std::vector<WeightVector> draws;
  draws.reserve(static_cast<std::size_t>(spec.draws));
  for (int j = 0; j < spec.draws; ++j) {
    if (spec.rho >= 1.0) {
      draws.emplace_back(std::vector<double>(static_cast<std::size_t>(num_studies), stream.uniform()));
    } else {
      draws.emplace_back(sample_equicorrelated_uniforms(num_studies, spec.rho, stream));
    }
  }
  return draws;
}

BetaMixture power_prior_mixture(const HistoricalSet& hist, const std::vector<WeightVector>& draws) {
  if (draws.empty()) throw std::domain_error("power_prior_mixture: need at least one draw");
  std::vector<BetaComponent> components;
  components.reserve(draws.size());
  for (const auto& d : draws) components.push_back(conditional_power_prior(hist, d));
  return BetaMixture::from_log_weights(std::vector<double>(draws.size(), 0.0), std::move(components));
}

BetaMixture fb_power_prior(const HistoricalSet& hist, const CopulaSpec& spec, SeededStream& stream) {
  return power_prior_mixture(hist, sample_weight_prior(hist.size(), spec, stream));
}

}  // namespace histprior
