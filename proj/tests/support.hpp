#pragma once

// Shared helpers for the test binaries: random input generators and
// reference computations that do not go through the library.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "histprior/data_model.hpp"

namespace testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

  histprior::StudyResult study(int min_size = 1, int max_size = 200) {
    const int n = integer(min_size, max_size);
    return {integer(0, n), n};
  }

  histprior::HistoricalSet historical(int min_h = 1, int max_h = 5, int max_size = 200) {
    std::vector<histprior::StudyResult> studies;
    const int h = integer(min_h, max_h);
    for (int i = 0; i < h; ++i) studies.push_back(study(1, max_size));
    return histprior::HistoricalSet(studies);
  }

  std::vector<double> weights(int h) {
    std::vector<double> d(static_cast<std::size_t>(h));
    for (auto& x : d) x = uniform();
    return d;
  }

  histprior::BetaMixture mixture(int max_components = 4, double lo = 0.5, double hi = 200.0) {
    const int k = integer(1, max_components);
    std::vector<double> w(static_cast<std::size_t>(k));
    std::vector<histprior::BetaComponent> comps;
    double total = 0.0;
    for (auto& x : w) total += (x = uniform(0.05, 1.0));
    for (auto& x : w) x /= total;
    double sum = 0.0;
    for (int j = 0; j + 1 < k; ++j) sum += w[j];
    w.back() = 1.0 - sum;
    for (int j = 0; j < k; ++j) comps.emplace_back(log_uniform(lo, hi), log_uniform(lo, hi));
    return histprior::BetaMixture(w, comps);
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline long double ref_log_beta(long double a, long double b) {
  return boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b);
}

inline double ref_beta_density(double t, double a, double b) {
  return std::exp(static_cast<double>((a - 1) * std::log(t) + (b - 1) * std::log1p(-t) - ref_log_beta(a, b)));
}

/// Tanh-sinh quadrature on [lo, hi]; copes with integrable endpoint singularities.
template <typename F>
double ref_integrate(F f, double lo, double hi) {
  static boost::math::quadrature::tanh_sinh<double> rule;
  const std::function<double(double)> g = f;
  return rule.integrate(g, lo, hi, 1e-12);
}

/// Integral of f over (0,1), split at the given interior breakpoints.
template <typename F>
double ref_integrate_unit(F f, std::vector<double> breaks = {}) {
  breaks.insert(breaks.begin(), 0.0);
  breaks.push_back(1.0);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) total += ref_integrate(f, breaks[i], breaks[i + 1]);
  return total;
}

inline double ref_mixture_density(const histprior::BetaMixture& m, double t) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    s += m.weights()[j] * ref_beta_density(t, m.components()[j].alpha, m.components()[j].beta);
  }
  return s;
}

/// Break points at the component modes and +-4 sd, to help the reference quadrature.
inline std::vector<double> mixture_breaks(const histprior::BetaMixture& m) {
  std::vector<double> b;
  for (const auto& c : m.components()) {
    const double mean = c.mean(), sd = std::sqrt(c.variance());
    for (double k : {-4.0, -1.0, 0.0, 1.0, 4.0}) {
      const double t = mean + k * sd;
      if (t > 1e-9 && t < 1 - 1e-9) b.push_back(t);
    }
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

}  // namespace testing
