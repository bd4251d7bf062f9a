#include "histprior/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace histprior {
namespace {

constexpr double kLnSqrt2Pi = 0.918938533204672741780329736406;

// lgamma(x) - [(x - 1/2) ln x - x + ln sqrt(2 pi)] for x >= 10, from the
// Stirling series; truncation error below 1e-17 at x = 10.
double stirling_correction(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return inv *
         (1.0 / 12.0 +
          inv2 * (-1.0 / 360.0 +
                  inv2 * (1.0 / 1260.0 +
                          inv2 * (-1.0 / 1680.0 +
                                  inv2 * (1.0 / 1188.0 +
                                          inv2 * (-691.0 / 360360.0 +
                                                  inv2 * (1.0 / 156.0 +
                                                          inv2 * (-3617.0 / 122400.0))))))));
}

double simpson_panel(const std::function<double(double)>& f, double a, double b, double fa,
                     double fm, double fb, double whole, double tol, int depth, bool& capped,
                     long& budget) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  budget -= 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(left + right);
  if (std::abs(delta) <= 15.0 * std::max(tol, roundoff) || lm <= a || rm >= b) {
    return left + right + delta / 15.0;
  }
  if (depth <= 0 || budget <= 0) {
    capped = true;
    return left + right + delta / 15.0;
  }
  return simpson_panel(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, capped, budget) +
         simpson_panel(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, capped, budget);
}

std::vector<double> clamp_to_cube(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  for (auto& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

struct Vertex {
  std::vector<double> x;
  double value;  // of the objective being maximised
};

// One Nelder-Mead pass. Every trial point is clamped into the cube.
Vertex nelder_mead(const BoxObjective& f, const std::vector<double>& start, double step,
                   const BoxOptions& opt, int& evals) {
  const std::size_t d = start.size();
  std::vector<Vertex> simplex;
  simplex.reserve(d + 1);
  simplex.push_back({start, f(start)});
  ++evals;
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<double> x = start;
    x[i] = x[i] + step <= 1.0 ? x[i] + step : x[i] - step;
    x[i] = std::clamp(x[i], 0.0, 1.0);
    simplex.push_back({x, f(x)});
    ++evals;
  }

  auto eval_at = [&](std::vector<double> x) {
    for (auto& v : x) v = std::clamp(v, 0.0, 1.0);
    const double value = f(x);
    ++evals;
    return Vertex{std::move(x), value};
  };

  std::vector<double> centroid(d);
  const int limit = evals + opt.max_evaluations;
  while (evals < limit) {
    std::stable_sort(simplex.begin(), simplex.end(),
                     [](const Vertex& a, const Vertex& b) { return a.value > b.value; });
    const Vertex& best = simplex.front();
    const Vertex& worst = simplex.back();
    double spread = 0.0;
    for (const auto& v : simplex) {
      for (std::size_t i = 0; i < d; ++i) spread = std::max(spread, std::abs(v.x[i] - best.x[i]));
    }
    const double f_spread = best.value - worst.value;
    if (spread <= opt.x_tol || f_spread <= opt.f_tol * (1.0 + std::abs(best.value))) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t i = 0; i < d; ++i) centroid[i] += simplex[k].x[i];
    }
    for (auto& c : centroid) c /= static_cast<double>(d);

    auto along = [&](double t) {
      std::vector<double> x(d);
      for (std::size_t i = 0; i < d; ++i) x[i] = centroid[i] + t * (worst.x[i] - centroid[i]);
      return x;
    };

    Vertex reflected = eval_at(along(-1.0));
    if (reflected.value > best.value) {
      Vertex expanded = eval_at(along(-2.0));
      simplex.back() = expanded.value > reflected.value ? std::move(expanded) : std::move(reflected);
      continue;
    }
    if (reflected.value > simplex[d - 1].value) {
      simplex.back() = std::move(reflected);
      continue;
    }
    if (reflected.value > worst.value) {
      Vertex contracted = eval_at(along(-0.5));
      if (contracted.value >= reflected.value) {
        simplex.back() = std::move(contracted);
        continue;
      }
    } else {
      Vertex contracted = eval_at(along(0.5));
      if (contracted.value > worst.value) {
        simplex.back() = std::move(contracted);
        continue;
      }
    }
    for (std::size_t k = 1; k <= d; ++k) {
      std::vector<double> x(d);
      for (std::size_t i = 0; i < d; ++i) x[i] = best.x[i] + 0.5 * (simplex[k].x[i] - best.x[i]);
      simplex[k] = eval_at(std::move(x));
    }
  }
  return *std::max_element(simplex.begin(), simplex.end(),
                           [](const Vertex& a, const Vertex& b) { return a.value < b.value; });
}

// Coordinate-wise pattern search; only ever accepts strict improvements.
void compass_polish(const BoxObjective& f, Vertex& v, const BoxOptions& opt, int& evals) {
  double step = 1e-3;
  const int budget = evals + opt.max_evaluations;
  while (step > opt.x_tol * 1e-2 && evals < budget) {
    bool improved = false;
    for (std::size_t i = 0; i < v.x.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        std::vector<double> y = v.x;
        y[i] = std::clamp(y[i] + sign * step, 0.0, 1.0);
        if (y[i] == v.x[i]) continue;
        const double value = f(y);
        ++evals;
        if (value > v.value) {
          v = Vertex{std::move(y), value};
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
}

}  // namespace

double log_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("log_beta: arguments must be positive");
  const double p = std::min(a, b);
  const double q = std::max(a, b);
  if (p >= 10.0) {
    const double corr = stirling_correction(p) + stirling_correction(q) - stirling_correction(p + q);
    return -0.5 * std::log(q) + kLnSqrt2Pi + corr + (p - 0.5) * std::log(p / (p + q)) +
           q * std::log1p(-p / (p + q));
  }
  if (q >= 10.0) {
    const double corr = stirling_correction(q) - stirling_correction(p + q);
    return std::lgamma(p) + corr + p - p * std::log(p + q) + (q - 0.5) * std::log1p(-p / (p + q));
  }
  return std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q);
}

double log_choose(int n, int x) {
  if (x < 0 || x > n) throw std::domain_error("log_choose: need 0 <= x <= n");
  if (x == 0 || x == n) return 0.0;
  return -std::log(static_cast<double>(n) + 1.0) - log_beta(n - x + 1.0, x + 1.0);
}

double log_beta_binomial(int x, int n, double a, double b) {
  if (x < 0 || x > n) throw std::domain_error("log_beta_binomial: need 0 <= x <= n");
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("log_beta_binomial: a, b must be positive");
  if (n == 0) return 0.0;
  return log_choose(n, x) + log_beta(x + a, n - x + b) - log_beta(a, b);
}

double log_binomial_pmf(int x, int n, double p) {
  if (x < 0 || x > n) throw std::domain_error("log_binomial_pmf: need 0 <= x <= n");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (p <= 0.0) return x == 0 ? 0.0 : kNegInf;
  if (p >= 1.0) return x == n ? 0.0 : kNegInf;
  return log_choose(n, x) + x * std::log(p) + (n - x) * std::log1p(-p);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }

double integrate(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw std::domain_error("integrate: need lo < hi");
  if (!(tol > 0.0)) throw std::domain_error("integrate: tolerance must be positive");
  constexpr int kInitialPanels = 8;
  constexpr int kMaxDepth = 50;
  long budget = 20'000'000;
  bool capped = false;
  const double width = (hi - lo) / kInitialPanels;
  double total = 0.0;
  double fa = f(lo);
  for (int k = 0; k < kInitialPanels; ++k) {
    const double a = lo + k * width;
    const double b = k + 1 == kInitialPanels ? hi : lo + (k + 1) * width;
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson_panel(f, a, b, fa, fm, fb, whole, tol / kInitialPanels, kMaxDepth, capped,
                           budget);
    fa = fb;
  }
  if (!std::isfinite(total)) throw NumericalError("integrate: non-finite integrand", total);
  if (capped) throw NumericalError("integrate: refinement limit reached", total);
  return total;
}

double QuadratureRule::apply(const std::function<double(double)>& f) const {
  double sum = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) sum += weights[k] * f(nodes[k]);
  return sum;
}

QuadratureRule gauss_legendre(int n, double lo, double hi) {
  if (n < 2) throw std::domain_error("gauss_legendre: need at least 2 nodes");
  QuadratureRule rule;
  rule.kind = QuadratureKind::Legendre;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mid = 0.5 * (hi + lo);
  const double half = 0.5 * (hi - lo);
  const int m = (n + 1) / 2;
  for (int i = 1; i <= m; ++i) {
    double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z_old = z;
      z = z_old - p1 / pp;
      if (std::abs(z - z_old) <= 1e-15) break;
    }
    rule.nodes[i - 1] = mid - half * z;
    rule.nodes[n - i] = mid + half * z;
    rule.weights[i - 1] = 2.0 * half / ((1.0 - z * z) * pp * pp);
    rule.weights[n - i] = rule.weights[i - 1];
  }
  return rule;
}

QuadratureRule gauss_hermite(int n) {
  if (n < 2) throw std::domain_error("gauss_hermite: need at least 2 nodes");
  // Physicists' rule for exp(-x^2) via orthonormal Hermite recursion, then
  // rescaled to the standard normal weight.
  constexpr double kPiMinusQuarter = 0.7511255444649425;
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 1; i <= m; ++i) {
    if (i == 1) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 2) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 3) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 4) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 3];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = kPiMinusQuarter, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z_old = z;
      z = z_old - p1 / pp;
      if (std::abs(z - z_old) <= 1e-15) break;
    }
    x[i - 1] = z;
    x[n - i] = -z;
    w[i - 1] = 2.0 / (pp * pp);
    w[n - i] = w[i - 1];
  }
  QuadratureRule rule;
  rule.kind = QuadratureKind::Hermite;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    // ascending order
    rule.nodes[k] = std::numbers::sqrt2 * x[n - 1 - k];
    rule.weights[k] = w[n - 1 - k] / std::sqrt(std::numbers::pi);
  }
  return rule;
}

QuadratureRule composite_gauss_legendre(int panels, int order, double lo, double hi) {
  if (panels < 1) throw std::domain_error("composite_gauss_legendre: need a panel");
  const QuadratureRule unit = gauss_legendre(order, 0.0, 1.0);
  QuadratureRule rule;
  rule.kind = QuadratureKind::Legendre;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * order);
  rule.weights.reserve(rule.nodes.capacity());
  const double width = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * width;
    for (int k = 0; k < order; ++k) {
      rule.nodes.push_back(a + width * unit.nodes[k]);
      rule.weights.push_back(width * unit.weights[k]);
    }
  }
  return rule;
}

BoxResult maximize_box(const BoxObjective& f, int d,
                       const std::vector<std::vector<double>>& starts, const BoxOptions& options) {
  if (d < 1) throw std::domain_error("maximize_box: dimension must be positive");
  if (starts.empty()) throw std::domain_error("maximize_box: need at least one start");
  BoxResult result;
  bool have = false;
  int evals = 0;
  for (const auto& raw : starts) {
    if (static_cast<int>(raw.size()) != d) {
      throw std::domain_error("maximize_box: start has wrong dimension");
    }
    const std::vector<double> start = clamp_to_cube(raw);
    Vertex v = nelder_mead(f, start, options.initial_step, options, evals);
    // A restart from the converged point catches premature simplex collapse.
    Vertex again = nelder_mead(f, v.x, 0.1 * options.initial_step, options, evals);
    if (again.value > v.value) v = std::move(again);
    compass_polish(f, v, options, evals);
    if (!have || v.value > result.value) {
      result.argmax = std::move(v.x);
      result.value = v.value;
      have = true;
    }
  }
  result.evaluations = evals;
  return result;
}

std::vector<std::vector<double>> cube_vertex_starts(int d) {
  if (d < 1 || d > 20) throw std::domain_error("cube_vertex_starts: dimension out of range");
  std::vector<std::vector<double>> starts;
  starts.reserve((std::size_t{1} << d) + 1);
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    std::vector<double> x(d);
    for (int i = 0; i < d; ++i) x[i] = (mask >> i) & 1U ? 1.0 : 0.0;
    starts.push_back(std::move(x));
  }
  starts.emplace_back(static_cast<std::size_t>(d), 0.5);
  return starts;
}

}  // namespace histprior
