#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "histprior/map_prior.hpp"
#include "histprior/numerics.hpp"
#include "histprior/random.hpp"
#include "support.hpp"

using namespace histprior;

namespace {

std::vector<double> unit_grid(int cells) {
  std::vector<double> t(static_cast<std::size_t>(cells));
  for (int k = 0; k < cells; ++k) t[k] = (k + 0.5) / cells;
  return t;
}

double ref_study_loglik(double mu, double tau, const StudyResult& s, double half_width = 8.0, int pieces = 1) {
  auto f = [&](double eta) {
    const double p = 1.0 / (1.0 + std::exp(-eta));
    const double z = (eta - mu) / tau;
    return std::exp(std::lgamma(s.size + 1.0) - std::lgamma(s.events + 1.0) - std::lgamma(s.size - s.events + 1.0) +
                    s.events * std::log(p) + (s.size - s.events) * std::log1p(-p)) *
           std::exp(-0.5 * z * z) / (tau * std::sqrt(2 * std::numbers::pi));
  };
  const double lo = mu - half_width * tau, step = 2 * half_width * tau / pieces;
  double total = 0.0;
  for (int k = 0; k < pieces; ++k) total += testing::ref_integrate(f, lo + k * step, lo + (k + 1) * step);
  return std::log(total);
}

HistoricalSet scenario_like(std::uint64_t seed, int size, double sd) {
  SeededStream s(seed, 0);
  std::vector<StudyResult> studies;
  for (int i = 0; i < 5; ++i) {
    const double p = std::clamp(0.65 + sd * s.standard_normal(), 1e-6, 1 - 1e-6);
    studies.emplace_back(s.binomial(size, p), size);
  }
  return HistoricalSet(studies);
}

}  // namespace

TEST_CASE("MapConfig defaults and validation") {
  MapConfig cfg;
  CHECK(cfg.mu_prior_var == doctest::Approx(std::numbers::pi * std::numbers::pi / 3));
  CHECK(cfg.mu_nodes == 81);
  CHECK(cfg.tau_nodes == 61);
  CHECK(cfg.hermite_order == 41);
  CHECK_NOTHROW(cfg.validate());
  cfg.tau_nodes = 5;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
  cfg = MapConfig{};
  cfg.tau_halfnormal_scale = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
}

TEST_CASE("map_marginal_loglik examples") {
  const HistoricalSet one({StudyResult(5, 10)});
  CHECK(map_marginal_loglik(0.0, 0.0, one) == doctest::Approx(std::log(252.0 / 1024.0)).epsilon(1e-13));
  CHECK(std::abs(map_marginal_loglik(0.0, 0.3, one) - ref_study_loglik(0.0, 0.3, StudyResult(5, 10))) < 1e-6);

  const HistoricalSet two({StudyResult(5, 10), StudyResult(30, 45)});
  const double sum = map_marginal_loglik(0.4, 0.7, HistoricalSet({StudyResult(5, 10)})) +
                     map_marginal_loglik(0.4, 0.7, HistoricalSet({StudyResult(30, 45)}));
  CHECK(map_marginal_loglik(0.4, 0.7, two) == doctest::Approx(sum).epsilon(1e-14));
  CHECK_THROWS_AS(map_marginal_loglik(0.0, -1.0, one), std::domain_error);
}

TEST_CASE("map_marginal_loglik matches adaptive quadrature") {
  testing::Gen gen(41);
  for (int i = 0; i < 40; ++i) {
    const StudyResult s = gen.study(1, 200);
    const double mu = gen.uniform(-2, 2), tau = gen.uniform(0.05, 2.0);
    INFO("x=" << s.events << " n=" << s.size << " mu=" << mu << " tau=" << tau);
    CHECK(std::abs(map_marginal_loglik(mu, tau, HistoricalSet({s})) - ref_study_loglik(mu, tau, s, 20.0, 80)) < 1e-6);
  }
}

TEST_CASE("map_predictive_prior examples") {
  const DensityGrid half = map_predictive_prior(HistoricalSet({StudyResult(50, 100)}));
  CHECK(half.integral() == doctest::Approx(1.0).epsilon(1e-6));
  const auto mode = std::max_element(half.densities.begin(), half.densities.end()) - half.densities.begin();
  CHECK(std::abs(half.thetas[mode] - 0.5) < 0.05);

  const DensityGrid big = map_predictive_prior(HistoricalSet(std::vector<StudyResult>(5, StudyResult(650, 1000))));
  CHECK(big.integral() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(big.mean() - 0.65) < 0.02);
}

TEST_CASE("map_predictive_prior is invariant to study order") {
  const HistoricalSet a({StudyResult(30, 50), StudyResult(35, 50), StudyResult(28, 50)});
  const HistoricalSet b({StudyResult(28, 50), StudyResult(30, 50), StudyResult(35, 50)});
  const DensityGrid ga = map_predictive_prior(a), gb = map_predictive_prior(b);
  for (std::size_t k = 0; k < ga.densities.size(); ++k) CHECK(std::abs(ga.densities[k] - gb.densities[k]) < 1e-12);
}

TEST_CASE("map_predictive_prior is insensitive to wider grids") {
  const HistoricalSet hist = scenario_like(3, 50, 0.1);
  MapConfig wide;
  wide.mu_lo = -9;
  wide.mu_hi = 9;
  wide.mu_nodes = 161;
  wide.tau_scales = 6;
  wide.tau_nodes = 91;
  CHECK(std::abs(map_predictive_prior(hist).mean() - map_predictive_prior(hist, wide).mean()) < 1e-3);
}

TEST_CASE("a tiny heterogeneity scale approaches the pooled posterior") {
  const HistoricalSet hist(std::vector<StudyResult>(5, StudyResult(30, 50)));
  MapConfig cfg;
  cfg.tau_halfnormal_scale = 1e-4;
  const DensityGrid map = map_predictive_prior(hist, cfg);
  const DensityGrid pooled = tabulate(BetaMixture(BetaComponent(151, 101)), map.thetas);
  CHECK(total_variation(map, pooled) < 0.05);
}

TEST_CASE("fit_beta_mixture recovers a single beta") {
  const auto thetas = unit_grid(1000);
  const MixtureFit fit = fit_beta_mixture(tabulate(BetaMixture(BetaComponent(3, 5)), thetas));
  REQUIRE(fit.mixture.size() == 1);
  CHECK(fit.mixture.weights()[0] == 1.0);
  CHECK(std::abs(fit.mixture.components()[0].alpha - 3) < 0.1);
  CHECK(std::abs(fit.mixture.components()[0].beta - 5) < 0.1);
  CHECK(fit.good);
}

TEST_CASE("fit_beta_mixture recovers both modes of a bimodal target") {
  const auto thetas = unit_grid(1000);
  const BetaMixture truth({0.5, 0.5}, {BetaComponent(2, 8), BetaComponent(8, 2)});
  const MixtureFit fit = fit_beta_mixture(tabulate(truth, thetas));
  CHECK(fit.ise < 1e-4);
  CHECK(fit.mixture.size() >= 2);
  bool low = false, high = false;
  for (std::size_t j = 0; j < fit.mixture.size(); ++j) {
    if (fit.mixture.weights()[j] < 0.2) continue;
    const double m = fit.mixture.components()[j].mean();
    low = low || std::abs(m - 0.2) < 0.05;
    high = high || std::abs(m - 0.8) < 0.05;
  }
  CHECK(low);
  CHECK(high);
}

TEST_CASE("fitted mixtures are normalised and close to MAP targets") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    for (auto [size, sd] : {std::pair{50, 0.1}, std::pair{100, 0.05}}) {
      const DensityGrid target = map_predictive_prior(scenario_like(seed, size, sd));
      const MixtureFit fit = fit_beta_mixture(target);
      double w = 0.0;
      for (double x : fit.mixture.weights()) w += x;
      CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(fit.mixture.size() <= 3);
      INFO("seed=" << seed << " size=" << size << " tv=" << fit.tv);
      CHECK(fit.tv <= 0.02);
      CHECK(fit.good);
    }
  }
}

TEST_CASE("robustify") {
  const BetaMixture r = robustify(BetaMixture(BetaComponent(19, 17)), 0.1);
  REQUIRE(r.size() == 2);
  CHECK(r.weights()[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(r.weights()[1] == 0.1);
  CHECK(r.components()[0] == BetaComponent(19, 17));
  CHECK(r.components()[1] == BetaComponent(1, 1));

  const BetaMixture m({0.4, 0.6}, {BetaComponent(3, 9), BetaComponent(20, 10)});
  const BetaMixture same = robustify(m, 0.0);
  CHECK(same.weights() == m.weights());
  CHECK(same.components() == m.components());
  CHECK_THROWS_AS(robustify(m, 1.0), std::domain_error);

  testing::Gen gen(42);
  for (int i = 0; i < 50; ++i) {
    const BetaMixture base = gen.mixture();
    const double w = gen.uniform(0.01, 0.99);
    const BetaMixture rob = robustify(base, w);
    double total = 0.0;
    for (double x : rob.weights()) total += x;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mixture_density(rob, 0.5) ==
          doctest::Approx((1 - w) * mixture_density(base, 0.5) + w).epsilon(1e-14));
  }
}
