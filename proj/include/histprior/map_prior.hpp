#pragma once

#include <numbers>
#include <vector>

#include "histprior/data_model.hpp"

namespace histprior {

/// Hyperpriors and quadrature sizes for the logit-normal random-effects model.
struct MapConfig {
  double mu_prior_mean = 0.0;
  double mu_prior_var = std::numbers::pi * std::numbers::pi / 3.0;
  double tau_halfnormal_scale = 1.0;
  int mu_nodes = 81;       // uniform over [mu_lo, mu_hi]
  double mu_lo = -6.0;
  double mu_hi = 6.0;
  int tau_nodes = 61;      // geometric over (0, tau_scales * scale]
  double tau_scales = 4.0;
  int hermite_order = 41;
  int mu_refine = 16;      // interpolated sub-nodes per mu interval
  int theta_nodes = 1000;  // cell midpoints of an equal partition of (0,1)

  void validate() const;
};

/// Density tabulated on an increasing grid in (0,1).
struct DensityGrid {
  std::vector<double> thetas;
  std::vector<double> densities;

  double integral() const;  // trapezoid
  double mean() const;
  std::vector<double> normalised_densities() const;
};

/// Total variation distance between two densities on the same grid.
double total_variation(const DensityGrid& a, const DensityGrid& b);

/// Mixture density evaluated at each theta.
DensityGrid tabulate(const BetaMixture& m, const std::vector<double>& thetas);

/// Sum over studies of ln of the binomial likelihood integrated against the
/// N(mu, tau^2) random effect on the logit scale (Gauss-Hermite).
double map_marginal_loglik(double mu, double tau, const HistoricalSet& hist, const MapConfig& cfg = {});

/// Predictive density of a new study's probability given the historical
/// studies, integrated over the (mu, tau) posterior on a deterministic grid.
/// Throws NumericalError if every grid weight underflows.
DensityGrid map_predictive_prior(const HistoricalSet& hist, const MapConfig& cfg = {});

struct MixtureFit {
  BetaMixture mixture;
  double ise = 0.0;   // integrated squared error on the target grid
  double tv = 0.0;    // total variation distance on the target grid
  bool good = true;   // false when the fit is poor (tv > 0.02) or non-finite
};

/// Greedy integrated-squared-error fit of a beta mixture to a tabulated
/// density. Components are added while they improve the ISE by >= tol.
MixtureFit fit_beta_mixture(const DensityGrid& target, int max_components = 3, double tol = 1e-6);

/// Appends Be(1,1) with weight `vague_weight`, scaling the rest by 1 - vague_weight.
BetaMixture robustify(const BetaMixture& m, double vague_weight = 0.1);

}  // namespace histprior
