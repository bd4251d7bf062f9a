#include "histprior/map_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "histprior/numerics.hpp"

namespace histprior {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_expit(double eta) {
  return eta > 0.0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

double log_sum_exp(const std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - top);
  return top + std::log(sum);
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double sum = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) sum += 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
  return sum;
}

double expit(double eta) { return eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta)); }

// P(logit theta <= e) when mu is uniform on a cell of width h around mu and
// logit theta ~ N(mu, tau^2); uses the antiderivative x Phi(x) + phi(x) of Phi.
double smoothed_cdf(double e, double mu, double tau, double h) {
  if (std::isinf(e)) return e > 0.0 ? 1.0 : 0.0;
  const double z = (e - mu) / tau;
  const double r = 0.5 * h / tau;
  if (r < 1e-4) return normal_cdf(z);
  const auto anti = [](double x) { return x * normal_cdf(x) + std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
  return std::clamp((anti(z + r) - anti(z - r)) / (2.0 * r), 0.0, 1.0);
}

// Mode of the log integrand in eta; its derivative is strictly decreasing.
double integrand_mode(double mu, double tau, const StudyResult& s) {
  const double prec = 1.0 / (tau * tau);
  auto slope = [&](double eta) { return s.events - s.size * expit(eta) - (eta - mu) * prec; };
  double lo = mu, hi = mu;
  double step = std::max(tau, 0.5);
  if (slope(mu) > 0.0) {
    while (slope(hi) > 0.0) hi += step, step *= 2.0;
  } else {
    while (slope(lo) < 0.0) lo -= step, step *= 2.0;
  }
  double eta = 0.5 * (lo + hi);
  for (int iter = 0; iter < 100 && hi - lo > 1e-12 * (1.0 + std::abs(eta)); ++iter) {
    const double g = slope(eta);
    if (g > 0.0) lo = eta; else hi = eta;
    const double p = expit(eta);
    double next = eta + g / (s.size * p * (1.0 - p) + prec);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - eta) < 1e-14 * (1.0 + std::abs(eta))) break;
    eta = next;
  }
  return eta;
}

// Gauss-Hermite centred at the integrand's mode with Laplace scale.
double study_loglik(double mu, double tau, const StudyResult& s, double log_coef,
                    const QuadratureRule& hermite, std::vector<double>& scratch) {
  const auto log_kernel = [&](double eta) {
    return s.events * log_expit(eta) + (s.size - s.events) * log_expit(-eta);
  };
  if (tau == 0.0) return log_coef + log_kernel(mu);
  const double mode = integrand_mode(mu, tau, s);
  const double p = expit(mode);
  const double scale = 1.0 / std::sqrt(s.size * p * (1.0 - p) + 1.0 / (tau * tau));
  scratch.resize(hermite.nodes.size());
  for (std::size_t k = 0; k < hermite.nodes.size(); ++k) {
    const double z = hermite.nodes[k];
    const double eta = mode + scale * z;
    const double d = (eta - mu) / tau;
    scratch[k] = std::log(hermite.weights[k]) + log_kernel(eta) - 0.5 * d * d + 0.5 * z * z;
  }
  return log_coef + std::log(scale / tau) + log_sum_exp(scratch);
}

double loglik_with_rule(double mu, double tau, const HistoricalSet& hist,
                        const QuadratureRule& hermite, const std::vector<double>& log_coefs,
                        std::vector<double>& scratch) {
  double total = 0.0;
  for (std::size_t i = 0; i < hist.studies.size(); ++i) {
    total += study_loglik(mu, tau, hist.studies[i], log_coefs[i], hermite, scratch);
  }
  return total;
}

std::vector<double> tau_grid(const MapConfig& cfg) {
  const double top = cfg.tau_scales * cfg.tau_halfnormal_scale;
  const double bottom = top * 1e-3;
  std::vector<double> taus(static_cast<std::size_t>(cfg.tau_nodes));
  const double ratio = std::pow(top / bottom, 1.0 / (cfg.tau_nodes - 1));
  for (int k = 0; k < cfg.tau_nodes; ++k) taus[k] = bottom * std::pow(ratio, k);
  taus.back() = top;
  return taus;
}

// Width of the cell each node represents; the first cell reaches down to 0.
std::vector<double> cell_widths(const std::vector<double>& nodes, double lower_edge) {
  std::vector<double> widths(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double lo = k == 0 ? lower_edge : 0.5 * (nodes[k - 1] + nodes[k]);
    const double hi = k + 1 == nodes.size() ? nodes[k] : 0.5 * (nodes[k] + nodes[k + 1]);
    widths[k] = hi - lo;
  }
  return widths;
}

// Positive part of the residual around its largest value, moment-matched to a beta.
BetaComponent moment_match_residual(const std::vector<double>& thetas,
                                    const std::vector<double>& residual, double& mass) {
  const auto peak = static_cast<std::size_t>(
      std::max_element(residual.begin(), residual.end()) - residual.begin());
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && residual[lo - 1] > 0.0) --lo;
  while (hi + 1 < residual.size() && residual[hi + 1] > 0.0) ++hi;
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) {
    const double w = std::max(residual[k], 0.0);
    m0 += w;
    m1 += w * thetas[k];
    m2 += w * thetas[k] * thetas[k];
  }
  const double step = thetas.size() > 1 ? thetas[1] - thetas[0] : 1.0;
  mass = m0 * step;
  if (!(m0 > 0.0)) return BetaComponent(1.0, 1.0);
  const double mean = std::clamp(m1 / m0, 1e-3, 1.0 - 1e-3);
  const double var = std::max(m2 / m0 - mean * mean, step * step);
  const double common = std::max(mean * (1.0 - mean) / var - 1.0, 0.5);
  return BetaComponent(std::max(mean * common, 0.1), std::max((1.0 - mean) * common, 0.1));
}

// Maps between box coordinates and (log-alpha, log-beta, logit-weight).
struct MixtureCoding {
  static constexpr double kLogLo = -2.302585092994046;  // ln 0.1
  static constexpr double kLogHi = 10.819778284410283;  // ln 5e4
  static constexpr double kLogitSpan = 12.0;
  int components;

  int dimension() const { return 3 * components - 1; }

  std::vector<double> encode(const std::vector<double>& weights,
                             const std::vector<BetaComponent>& comps) const {
    std::vector<double> u;
    auto to_unit = [](double v, double lo, double hi) { return std::clamp((v - lo) / (hi - lo), 0.0, 1.0); };
    for (const auto& c : comps) {
      u.push_back(to_unit(std::log(c.alpha), kLogLo, kLogHi));
      u.push_back(to_unit(std::log(c.beta), kLogLo, kLogHi));
    }
    for (int k = 1; k < components; ++k) {
      const double logit = std::log(weights[k] / weights[0]);
      u.push_back(to_unit(logit, -kLogitSpan, kLogitSpan));
    }
    return u;
  }

  void decode(std::span<const double> u, std::vector<double>& log_weights,
              std::vector<BetaComponent>& comps) const {
    comps.clear();
    log_weights.assign(static_cast<std::size_t>(components), 0.0);
    for (int k = 0; k < components; ++k) {
      const double la = kLogLo + u[2 * k] * (kLogHi - kLogLo);
      const double lb = kLogLo + u[2 * k + 1] * (kLogHi - kLogLo);
      comps.emplace_back(std::exp(la), std::exp(lb));
    }
    for (int k = 1; k < components; ++k) {
      log_weights[k] = -kLogitSpan + u[2 * components + k - 1] * 2.0 * kLogitSpan;
    }
  }
};

class MixtureObjective {
 public:
  MixtureObjective(const std::vector<double>& thetas, const std::vector<double>& target)
      : thetas_(thetas), target_(target), fitted_(thetas.size()) {
    for (double t : thetas) {
      log_t_.push_back(std::log(t));
      log_1mt_.push_back(std::log1p(-t));
    }
  }

  const std::vector<double>& evaluate(const BetaMixture& m) {
    std::fill(fitted_.begin(), fitted_.end(), 0.0);
    for (std::size_t j = 0; j < m.size(); ++j) {
      const auto& c = m.components()[j];
      const double shift = std::log(m.weights()[j]) - log_beta(c.alpha, c.beta);
      for (std::size_t k = 0; k < thetas_.size(); ++k) {
        const double e = (c.alpha - 1.0) * log_t_[k] + (c.beta - 1.0) * log_1mt_[k] + shift;
        if (e > -700.0) fitted_[k] += std::exp(e);
      }
    }
    return fitted_;
  }

  double ise(const BetaMixture& m) {
    const auto& g = evaluate(m);
    double sum = 0.0;
    for (std::size_t k = 1; k < thetas_.size(); ++k) {
      const double d0 = g[k - 1] - target_[k - 1];
      const double d1 = g[k] - target_[k];
      sum += 0.5 * (thetas_[k] - thetas_[k - 1]) * (d0 * d0 + d1 * d1);
    }
    return sum;
  }

 private:
  const std::vector<double>& thetas_;
  const std::vector<double>& target_;
  std::vector<double> log_t_, log_1mt_, fitted_;
};

BetaMixture refine(MixtureObjective& objective, const BetaMixture& start, int max_evaluations = 20000) {
  const MixtureCoding coding{static_cast<int>(start.size())};
  std::vector<double> log_weights;
  std::vector<BetaComponent> comps;
  auto value = [&](std::span<const double> u) {
    coding.decode(u, log_weights, comps);
    const double e = objective.ise(BetaMixture::from_log_weights(log_weights, comps));
    return std::isfinite(e) ? -e : -std::numeric_limits<double>::max();
  };
  BoxOptions options;
  options.initial_step = 0.05;
  options.x_tol = 1e-9;
  options.max_evaluations = max_evaluations;
  const auto best = maximize_box(value, coding.dimension(),
                                 {coding.encode(start.weights(), start.components())}, options);
  coding.decode(best.argmax, log_weights, comps);
  return BetaMixture::from_log_weights(log_weights, comps);
}

}  // namespace

void MapConfig::validate() const {
  if (mu_nodes < 11 || tau_nodes < 11 || hermite_order < 11 || theta_nodes < 11) {
    throw std::domain_error("MapConfig: grid sizes must be at least 11");
  }
  if (!(tau_halfnormal_scale > 0.0) || !(mu_prior_var > 0.0) || !(tau_scales > 0.0)) {
    throw std::domain_error("MapConfig: scales must be positive");
  }
  if (!(mu_lo < mu_hi)) throw std::domain_error("MapConfig: empty mu range");
  if (mu_refine < 1) throw std::domain_error("MapConfig: mu_refine must be positive");
}

double DensityGrid::integral() const { return trapezoid(thetas, densities); }

double DensityGrid::mean() const {
  std::vector<double> moment(thetas.size());
  for (std::size_t k = 0; k < thetas.size(); ++k) moment[k] = thetas[k] * densities[k];
  return trapezoid(thetas, moment) / integral();
}

std::vector<double> DensityGrid::normalised_densities() const {
  const double total = integral();
  std::vector<double> out(densities);
  for (auto& d : out) d /= total;
  return out;
}

double total_variation(const DensityGrid& a, const DensityGrid& b) {
  if (a.thetas.size() != b.thetas.size()) throw std::domain_error("total_variation: grids differ");
  const auto fa = a.normalised_densities();
  const auto fb = b.normalised_densities();
  std::vector<double> diff(fa.size());
  for (std::size_t k = 0; k < fa.size(); ++k) diff[k] = std::abs(fa[k] - fb[k]);
  return 0.5 * trapezoid(a.thetas, diff);
}

DensityGrid tabulate(const BetaMixture& m, const std::vector<double>& thetas) {
  DensityGrid grid{thetas, std::vector<double>(thetas.size())};
  for (std::size_t k = 0; k < thetas.size(); ++k) grid.densities[k] = mixture_density(m, thetas[k]);
  return grid;
}

double map_marginal_loglik(double mu, double tau, const HistoricalSet& hist, const MapConfig& cfg) {
  if (!(tau >= 0.0)) throw std::domain_error("map_marginal_loglik: tau must be non-negative");
  const QuadratureRule hermite = gauss_hermite(cfg.hermite_order);
  std::vector<double> log_coefs;
  for (const auto& s : hist.studies) log_coefs.push_back(log_choose(s.size, s.events));
  std::vector<double> scratch;
  return loglik_with_rule(mu, tau, hist, hermite, log_coefs, scratch);
}

DensityGrid map_predictive_prior(const HistoricalSet& hist, const MapConfig& cfg) {
  cfg.validate();
  if (hist.studies.empty()) throw std::domain_error("map_predictive_prior: need a historical study");
  const QuadratureRule hermite = gauss_hermite(cfg.hermite_order);
  std::vector<double> log_coefs;
  for (const auto& s : hist.studies) log_coefs.push_back(log_choose(s.size, s.events));

  std::vector<double> mus(static_cast<std::size_t>(cfg.mu_nodes));
  const double mu_step = (cfg.mu_hi - cfg.mu_lo) / (cfg.mu_nodes - 1);
  for (int k = 0; k < cfg.mu_nodes; ++k) mus[k] = cfg.mu_lo + k * mu_step;
  const std::vector<double> taus = tau_grid(cfg);
  const std::vector<double> tau_widths = cell_widths(taus, 0.0);
  const double s = cfg.tau_halfnormal_scale;

  // log_weight[k][t] at (mus[k], taus[t]).
  std::vector<std::vector<double>> log_weight(mus.size(), std::vector<double>(taus.size()));
  std::vector<double> scratch;
  for (std::size_t k = 0; k < mus.size(); ++k) {
    const double d = mus[k] - cfg.mu_prior_mean;
    const double log_mu_prior = -0.5 * (kLog2Pi + std::log(cfg.mu_prior_var)) - 0.5 * d * d / cfg.mu_prior_var;
    for (std::size_t t = 0; t < taus.size(); ++t) {
      const double tau = taus[t];
      const double log_tau_prior = std::log(2.0) - 0.5 * kLog2Pi - std::log(s) - 0.5 * tau * tau / (s * s);
      log_weight[k][t] = loglik_with_rule(mus[k], tau, hist, hermite, log_coefs, scratch) + log_mu_prior +
                         log_tau_prior + std::log(tau_widths[t]);
    }
  }

  // The log-weight is smooth in mu, so cubic interpolation supplies sub-nodes
  // fine enough to resolve narrow random-effect distributions.
  struct Node {
    double mu, tau, log_weight, weight, width;
  };
  std::vector<Node> nodes;
  const int refine = cfg.mu_refine;
  const std::size_t last = mus.size() - 1;
  for (std::size_t k = 0; k <= last; ++k) {
    const int subs = k == last ? 1 : refine;
    const std::size_t base = std::clamp<std::size_t>(k == 0 ? 0 : k - 1, 0, last - 3);
    for (int j = 0; j < subs; ++j) {
      const double x = mus[k] + j * mu_step / refine;
      double basis[4];
      for (int a = 0; a < 4; ++a) {
        basis[a] = 1.0;
        for (int b = 0; b < 4; ++b) {
          if (b != a) basis[a] *= (x - mus[base + b]) / (mus[base + a] - mus[base + b]);
        }
      }
      // End nodes of the refined trapezoid carry half weight.
      const double edge = (k == 0 && j == 0) || k == last ? std::log(0.5) : 0.0;
      for (std::size_t t = 0; t < taus.size(); ++t) {
        const bool coarse = taus[t] >= 2.0 * mu_step;
        if (coarse && j != 0) continue;
        double lw = log_weight[k][t] + (coarse ? std::log(static_cast<double>(refine)) : 0.0);
        if (j != 0) {
          lw = 0.0;
          for (int a = 0; a < 4; ++a) lw += basis[a] * log_weight[base + a][t];
        }
        nodes.push_back({x, taus[t], lw + edge, 0.0, coarse ? mu_step : mu_step / refine});
      }
    }
  }
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& n : nodes) top = std::max(top, n.log_weight);
  if (!std::isfinite(top)) {
    throw NumericalError("map_predictive_prior: all (mu, tau) grid weights underflow", top);
  }
  double total = 0.0;
  for (auto& n : nodes) {
    n.weight = std::exp(n.log_weight - top);
    total += n.weight;
  }

  const int cells = cfg.theta_nodes;
  std::vector<double> logit_edges(static_cast<std::size_t>(cells) + 1);
  logit_edges.front() = -std::numeric_limits<double>::infinity();
  logit_edges.back() = std::numeric_limits<double>::infinity();
  for (int k = 1; k < cells; ++k) {
    const double e = static_cast<double>(k) / cells;
    logit_edges[k] = std::log(e) - std::log1p(-e);
  }
  DensityGrid grid;
  grid.thetas.resize(cells);
  grid.densities.assign(cells, 0.0);
  for (int k = 0; k < cells; ++k) grid.thetas[k] = (k + 0.5) / cells;

  // Cell masses from normal CDF differences on the logit scale stay exact
  // however narrow the random-effect distribution is.
  // Each sub-node spreads over its mu cell; only cells within reach of it
  // receive non-negligible mass.
  for (const auto& n : nodes) {
    const double h = n.width;
    const double w = n.weight / total;
    if (w < 1e-16) continue;
    const double reach = 0.5 * h + 9.0 * n.tau;
    const auto lo_edge = std::upper_bound(logit_edges.begin(), logit_edges.end(), n.mu - reach);
    const auto hi_edge = std::lower_bound(logit_edges.begin(), logit_edges.end(), n.mu + reach);
    const auto first = static_cast<int>(std::max<std::ptrdiff_t>(lo_edge - logit_edges.begin() - 1, 0));
    const auto end = static_cast<int>(std::min<std::ptrdiff_t>(hi_edge - logit_edges.begin(), cells));
    double below = smoothed_cdf(logit_edges[first], n.mu, n.tau, h);
    for (int k = first; k < end; ++k) {
      const double above = k + 1 == cells ? 1.0 : smoothed_cdf(logit_edges[k + 1], n.mu, n.tau, h);
      grid.densities[k] += w * (above - below) * cells;
      below = above;
    }
  }
  const double area = grid.integral();
  for (auto& d : grid.densities) d /= area;
  return grid;
}

MixtureFit fit_beta_mixture(const DensityGrid& target, int max_components, double tol) {
  if (max_components < 1) throw std::domain_error("fit_beta_mixture: need at least one component");
  if (target.thetas.size() < 3) throw std::domain_error("fit_beta_mixture: target grid too small");
  const std::vector<double> density = target.normalised_densities();
  MixtureObjective objective(target.thetas, density);
  std::vector<double> coarse_thetas, coarse_density;
  for (std::size_t k = 0; k < density.size(); k += 5) {
    coarse_thetas.push_back(target.thetas[k]);
    coarse_density.push_back(density[k]);
  }
  MixtureObjective coarse(coarse_thetas, coarse_density);

  // One component by moment matching the whole target, then refined.
  std::vector<double> residual(density);
  double mass = 0.0;
  BetaMixture current = refine(objective, BetaMixture(moment_match_residual(target.thetas, residual, mass)));
  double current_ise = objective.ise(current);

  for (int k = 2; k <= max_components; ++k) {
    const auto& fitted = objective.evaluate(current);
    for (std::size_t i = 0; i < density.size(); ++i) residual[i] = density[i] - fitted[i];
    const BetaComponent added = moment_match_residual(target.thetas, residual, mass);
    // Several spreads and weights for the new component are screened briefly;
    // the most promising two are refined fully.
    std::vector<std::pair<double, BetaMixture>> screened;
    for (double spread : {1.0, 0.3, 3.0}) {
      const double mean = added.mean();
      const double common = std::max((added.alpha + added.beta) * spread, 0.5);
      const BetaComponent comp(std::max(mean * common, 0.1), std::max((1.0 - mean) * common, 0.1));
      for (double new_weight : {std::clamp(mass, 0.05, 0.5), 0.1, 0.3}) {
        std::vector<double> log_weights;
        for (double w : current.weights()) log_weights.push_back(std::log(w * (1.0 - new_weight)));
        log_weights.push_back(std::log(new_weight));
        std::vector<BetaComponent> comps = current.components();
        comps.push_back(comp);
        const BetaMixture quick = refine(coarse, BetaMixture::from_log_weights(log_weights, comps), 2000);
        screened.emplace_back(coarse.ise(quick), quick);
      }
    }
    std::stable_sort(screened.begin(), screened.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    BetaMixture candidate = current;
    double candidate_ise = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < std::min<std::size_t>(3, screened.size()); ++c) {
      const BetaMixture refined = refine(objective, screened[c].second);
      const double e = objective.ise(refined);
      if (e < candidate_ise) {
        candidate = refined;
        candidate_ise = e;
      }
    }
    if (!(current_ise - candidate_ise >= tol)) break;
    current = candidate;
    current_ise = candidate_ise;
  }

  MixtureFit fit{current, current_ise, 0.0, true};
  fit.tv = total_variation(target, DensityGrid{target.thetas, objective.evaluate(current)});
  fit.good = std::isfinite(fit.ise) && fit.tv <= 0.02;
  return fit;
}

BetaMixture robustify(const BetaMixture& m, double vague_weight) {
  if (vague_weight == 0.0) return m;
  if (!(vague_weight > 0.0 && vague_weight < 1.0)) {
    throw std::domain_error("robustify: vague weight must lie in [0,1)");
  }
  std::vector<double> weights;
  for (double w : m.weights()) weights.push_back(w * (1.0 - vague_weight));
  weights.push_back(vague_weight);
  std::vector<BetaComponent> comps = m.components();
  comps.emplace_back(1.0, 1.0);
  return BetaMixture(std::move(weights), std::move(comps));
}

}  // namespace histprior
