#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace histprior {

/// Raised when an iterative routine gives up. Carries its best estimate.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double last_estimate)
      : std::runtime_error(what), last_estimate_(last_estimate) {}

  double last_estimate() const noexcept { return last_estimate_; }

 private:
  double last_estimate_;
};

/// ln B(a, b). Accurate to ~1e-13 relative for 0 < a, b <= 1e6.
double log_beta(double a, double b);

/// ln C(n, x).
double log_choose(int n, int x);

/// ln of the beta-binomial pmf: ln[ C(n,x) B(x+a, n-x+b) / B(a,b) ].
double log_beta_binomial(int x, int n, double a, double b);

/// ln Bin(x; n, p), stable for p at or near 0 and 1.
double log_binomial_pmf(int x, int n, double p);

/// Standard normal CDF.
double normal_cdf(double z);

/// Integrates f over [lo, hi] by adaptive Simpson bisection.
/// Throws NumericalError (carrying the estimate) if any panel hits the depth cap.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double tol = 1e-10);

enum class QuadratureKind { Legendre, Hermite };

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  QuadratureKind kind = QuadratureKind::Legendre;

  double apply(const std::function<double(double)>& f) const;
};

/// n-point Gauss-Legendre rule mapped to [lo, hi]; weights sum to hi - lo.
QuadratureRule gauss_legendre(int n, double lo, double hi);

/// n-point Gauss-Hermite rule for E[f(Z)], Z ~ N(0,1); weights sum to 1.
QuadratureRule gauss_hermite(int n);

/// Composite Gauss-Legendre rule: `panels` equal panels on [lo, hi], each
/// with an `order`-point rule.
QuadratureRule composite_gauss_legendre(int panels, int order, double lo, double hi);

struct BoxOptions {
  double initial_step = 0.1;
  double x_tol = 1e-10;
  double f_tol = 1e-14;
  int max_evaluations = 20000;
};

struct BoxResult {
  std::vector<double> argmax;
  double value = 0.0;
  int evaluations = 0;
};

using BoxObjective = std::function<double(std::span<const double>)>;

/// Maximises f over the unit cube [0,1]^d from every start point (Nelder-Mead
/// with coordinate clamping, then a compass-search polish). Returns the best
/// local optimum found.
BoxResult maximize_box(const BoxObjective& f, int d,
                       const std::vector<std::vector<double>>& starts,
                       const BoxOptions& options = {});

/// All 2^d cube vertices followed by the centroid.
std::vector<std::vector<double>> cube_vertex_starts(int d);

}  // namespace histprior
