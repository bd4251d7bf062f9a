#include "histprior/oc_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "histprior/power_prior.hpp"

namespace histprior {
namespace {

constexpr int kPanels = 256;
constexpr int kPanelOrder = 10;
constexpr std::uint64_t kPriorStreamBase = std::uint64_t{1} << 40;

// Uniform panels on (0,1) refined geometrically toward both ends, so beta
// densities with shapes below 1 still integrate accurately. The rule is built
// on (0, 1/2) and mirrored; complements holds 1 - node without rounding.
QuadratureRule graded_rule(std::vector<double>& complements) {
  constexpr int kGraded = 60;
  const double width = 1.0 / kPanels;
  std::vector<double> edges{0.0};
  for (int g = kGraded; g >= 1; --g) edges.push_back(width * std::ldexp(1.0, -g));
  for (int p = 1; p <= kPanels / 2; ++p) edges.push_back(p * width);
  QuadratureRule half;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const QuadratureRule panel = gauss_legendre(kPanelOrder, edges[e], edges[e + 1]);
    half.nodes.insert(half.nodes.end(), panel.nodes.begin(), panel.nodes.end());
    half.weights.insert(half.weights.end(), panel.weights.begin(), panel.weights.end());
  }
  QuadratureRule rule;
  complements.clear();
  for (std::size_t k = 0; k < half.nodes.size(); ++k) {
    rule.nodes.push_back(half.nodes[k]);
    rule.weights.push_back(half.weights[k]);
    complements.push_back(1.0 - half.nodes[k]);
  }
  for (std::size_t k = half.nodes.size(); k-- > 0;) {
    rule.nodes.push_back(1.0 - half.nodes[k]);
    rule.weights.push_back(half.weights[k]);
    complements.push_back(half.nodes[k]);
  }
  return rule;
}

std::vector<double> binomial_pmf(int n, double p) {
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  for (int x = 0; x <= n; ++x) pmf[x] = std::exp(log_binomial_pmf(x, n, p));
  return pmf;
}

// tail[x] = P(X >= x); tail[n + 1] = 0.
std::vector<double> upper_tail(const std::vector<double>& pmf) {
  std::vector<double> tail(pmf.size() + 1, 0.0);
  for (std::size_t x = pmf.size(); x-- > 0;) tail[x] = tail[x + 1] + pmf[x];
  return tail;
}

double log_sum_exp(const std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - top);
  return top + std::log(sum);
}

}  // namespace

PriorMethod PriorMethod::of(PriorKind kind, double rho) {
  PriorMethod m;
  m.kind = kind;
  m.rho = rho;
  m.validate();
  return m;
}

PriorMethod PriorMethod::parse(const std::string& name, double rho) {
  static const std::pair<const char*, PriorKind> kNames[] = {
      {"none", PriorKind::NoHistory},         {"eb-combined", PriorKind::EBCombined},
      {"eb-separate", PriorKind::EBSeparate}, {"eb-pooled", PriorKind::EBPooled},
      {"fb-copula", PriorKind::FBCopula},     {"fb-pooled", PriorKind::FBPooled},
      {"map", PriorKind::MAP},                {"map-robust", PriorKind::MAPRobust},
  };
  for (const auto& [key, kind] : kNames) {
    if (name == key) return of(kind, rho);
  }
  throw std::invalid_argument("unknown prior method '" + name + "'");
}

std::string PriorMethod::name() const {
  switch (kind) {
    case PriorKind::NoHistory: return "none";
    case PriorKind::EBCombined: return "eb-combined";
    case PriorKind::EBSeparate: return "eb-separate";
    case PriorKind::EBPooled: return "eb-pooled";
    case PriorKind::FBCopula: return "fb-copula";
    case PriorKind::FBPooled: return "fb-pooled";
    case PriorKind::MAP: return "map";
    case PriorKind::MAPRobust: return "map-robust";
  }
  return "unknown";
}

std::string PriorMethod::label() const {
  if (kind != PriorKind::FBCopula) return name();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", rho);
  return name() + "-" + buf;
}

bool PriorMethod::adaptive() const {
  return kind == PriorKind::EBCombined || kind == PriorKind::EBSeparate || kind == PriorKind::EBPooled;
}

void PriorMethod::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::domain_error("prior method: rho must lie in [0,1]");
  if (draws < 1) throw std::domain_error("prior method: draws must be positive");
  if (max_components < 1) throw std::domain_error("prior method: need at least one mixture component");
  if (!(vague_weight >= 0.0 && vague_weight < 1.0)) {
    throw std::domain_error("prior method: vague weight must lie in [0,1)");
  }
  map.validate();
}

void TrialDesign::validate() const {
  if (n_star < 1 || n_T < 1) throw std::domain_error("trial design: arm sizes must be positive");
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::domain_error("trial design: threshold must lie in (0,1)");
  if (!std::isfinite(effect)) throw std::domain_error("trial design: effect must be finite");
}

SeededStream prior_stream(std::uint64_t seed, std::uint64_t replicate) {
  return SeededStream(seed, kPriorStreamBase + replicate);
}

WeightVector eb_weights(PriorKind kind, const HistoricalSet& hist, const StudyResult& current) {
  switch (kind) {
    case PriorKind::EBCombined: return eb_combined(hist, current);
    case PriorKind::EBSeparate: return eb_separate(hist, current);
    case PriorKind::EBPooled: return eb_pooled(hist, current);
    default: throw std::domain_error("eb_weights: not an empirical Bayes method");
  }
}

BetaMixture build_prior(const PriorMethod& method, const HistoricalSet& hist,
                        const std::optional<StudyResult>& current, SeededStream stream,
                        std::optional<BetaMixture>* map_cache) {
  method.validate();
  switch (method.kind) {
    case PriorKind::NoHistory:
      return BetaMixture();
    case PriorKind::EBCombined:
    case PriorKind::EBSeparate:
    case PriorKind::EBPooled:
      if (!current) throw std::domain_error(method.name() + " needs the current study result");
      return BetaMixture(conditional_power_prior(hist, eb_weights(method.kind, hist, *current)));
    case PriorKind::FBCopula:
      return fb_power_prior(hist, CopulaSpec(method.rho, method.draws), stream);
    case PriorKind::FBPooled:
      return fb_power_prior(hist, CopulaSpec(1.0, method.draws), stream);
    case PriorKind::MAP:
    case PriorKind::MAPRobust: {
      BetaMixture fitted;
      if (map_cache != nullptr && map_cache->has_value()) {
        fitted = **map_cache;
      } else {
        fitted = fit_beta_mixture(map_predictive_prior(hist, method.map), method.max_components).mixture;
        if (map_cache != nullptr) *map_cache = fitted;
      }
      return method.kind == PriorKind::MAP ? fitted : robustify(fitted, method.vague_weight);
    }
  }
  throw std::logic_error("unhandled prior kind");
}

double prior_sample_size(const BetaMixture& m) {
  double total = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    total += m.weights()[j] * (m.components()[j].alpha + m.components()[j].beta);
  }
  return total - 2.0;
}

DecisionIntegrator::DecisionIntegrator(int n_T)
    : n_T_(n_T) {
  std::vector<double> complements;
  rule_ = graded_rule(complements);
  if (n_T < 1) throw std::domain_error("DecisionIntegrator: treatment size must be positive");
  const std::size_t nodes = rule_.nodes.size();
  const int trials = n_T + 1;
  std::vector<double> log_coef(static_cast<std::size_t>(trials) + 1);
  for (int y = 0; y <= trials; ++y) log_coef[y] = log_choose(trials, y);
  log_nodes_.resize(nodes);
  log1m_nodes_.resize(nodes);
  survival_.assign(static_cast<std::size_t>(n_T + 1) * nodes, 0.0);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double t = rule_.nodes[k];
    log_nodes_[k] = std::log(t);
    log1m_nodes_[k] = std::log(complements[k]);
    // P(theta_T > t) for Be(1+x, 1+n_T-x) equals P(Bin(n_T+1, t) <= x).
    double cdf = 0.0;
    for (int x = 0; x <= n_T; ++x) {
      cdf += std::exp(log_coef[x] + x * log_nodes_[k] + (trials - x) * log1m_nodes_[k]);
      survival_[static_cast<std::size_t>(x) * nodes + k] = std::min(cdf, 1.0);
    }
  }
}

std::vector<double> DecisionIntegrator::node_masses(const std::vector<double>& log_density) const {
  const std::size_t nodes = rule_.nodes.size();
  if (log_density.size() != nodes) throw std::domain_error("node_masses: wrong number of nodes");
  const double top = *std::max_element(log_density.begin(), log_density.end());
  if (!std::isfinite(top)) throw NumericalError("node_masses: density vanishes on every node", top);
  std::vector<double> masses(nodes);
  double total = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    masses[k] = rule_.weights[k] * std::exp(log_density[k] - top);
    total += masses[k];
  }
  for (auto& m : masses) m /= total;
  return masses;
}

std::vector<double> DecisionIntegrator::node_masses(const BetaMixture& control) const {
  return node_masses(log_density(control));
}

std::vector<double> DecisionIntegrator::log_density(const BetaMixture& control) const {
  const std::size_t nodes = rule_.nodes.size();
  std::vector<double> log_density(nodes);
  std::vector<double> terms(control.size());
  std::vector<double> shift(control.size());
  for (std::size_t j = 0; j < control.size(); ++j) {
    const auto& c = control.components()[j];
    shift[j] = std::log(control.weights()[j]) - log_beta(c.alpha, c.beta);
  }
  for (std::size_t k = 0; k < nodes; ++k) {
    for (std::size_t j = 0; j < control.size(); ++j) {
      const auto& c = control.components()[j];
      terms[j] = (c.alpha - 1.0) * log_nodes_[k] + (c.beta - 1.0) * log1m_nodes_[k] + shift[j];
    }
    log_density[k] = log_sum_exp(terms);
  }
  return log_density;
}

double DecisionIntegrator::prob_treatment_better(const std::vector<double>& masses, int x_T) const {
  if (x_T < 0 || x_T > n_T_) throw std::domain_error("prob_treatment_better: need 0 <= x_T <= n_T");
  const std::size_t nodes = rule_.nodes.size();
  const double* row = survival_.data() + static_cast<std::size_t>(x_T) * nodes;
  double sum = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) sum += masses[k] * row[k];
  return std::clamp(sum, 0.0, 1.0);
}

int DecisionIntegrator::threshold(const std::vector<double>& masses, double threshold) const {
  int lo = 0, hi = n_T_ + 1;
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (prob_treatment_better(masses, mid) > threshold) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

int DecisionIntegrator::threshold_scan(const std::vector<double>& masses, double threshold) const {
  for (int x = 0; x <= n_T_; ++x) {
    if (prob_treatment_better(masses, x) > threshold) return x;
  }
  return n_T_ + 1;
}

double prob_treatment_better(const BetaMixture& control, int x_T, int n_T) {
  const DecisionIntegrator integrator(n_T);
  return integrator.prob_treatment_better(integrator.node_masses(control), x_T);
}

bool decision(const BetaMixture& control, int x_T, const TrialDesign& design) {
  design.validate();
  return prob_treatment_better(control, x_T, design.n_T) > design.threshold;
}

ControlPosteriorTable tabulate_control(const BetaMixture& prior, const TrialDesign& design) {
  design.validate();
  const DecisionIntegrator integrator(design.n_T);
  const auto& nodes = integrator.rule().nodes;
  const auto& log_t = integrator.log_nodes();
  const auto& log_1mt = integrator.log1m_nodes();
  const std::vector<double> log_prior = integrator.log_density(prior);
  const int n = design.n_star;
  ControlPosteriorTable table;
  std::vector<double> log_post(nodes.size());
  for (int x = 0; x <= n; ++x) {
    const BetaMixture post = mixture_posterior(prior, StudyResult(x, n));
    table.mean.push_back(mixture_mean(post));
    table.pss.push_back(prior_sample_size(post) - n);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      log_post[k] = log_prior[k] + x * log_t[k] + (n - x) * log_1mt[k];
    }
    table.threshold.push_back(integrator.threshold(integrator.node_masses(log_post), design.threshold));
  }
  return table;
}

ControlPosteriorTable tabulate_control(const PriorMethod& method, const HistoricalSet& hist,
                                       const TrialDesign& design, SeededStream stream,
                                       std::optional<BetaMixture>* map_cache) {
  design.validate();
  if (!method.adaptive()) {
    return tabulate_control(build_prior(method, hist, std::nullopt, stream, map_cache), design);
  }
  const DecisionIntegrator integrator(design.n_T);
  const auto& nodes = integrator.rule().nodes;
  const auto& log_t = integrator.log_nodes();
  const auto& log_1mt = integrator.log1m_nodes();
  const int n = design.n_star;
  ControlPosteriorTable table;
  std::vector<double> log_post(nodes.size());
  for (int x = 0; x <= n; ++x) {
    const BetaComponent prior =
        conditional_power_prior(hist, eb_weights(method.kind, hist, StudyResult(x, n)));
    const BetaComponent post(prior.alpha + x, prior.beta + (n - x));
    table.mean.push_back(post.mean());
    table.pss.push_back(prior.alpha + prior.beta - 2.0);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      log_post[k] = (post.alpha - 1.0) * log_t[k] + (post.beta - 1.0) * log_1mt[k];
    }
    table.threshold.push_back(integrator.threshold(integrator.node_masses(log_post), design.threshold));
  }
  return table;
}

std::vector<OCRow> oc_curve(const ControlPosteriorTable& table, const TrialDesign& design,
                            const std::vector<double>& thetas) {
  design.validate();
  const int n = design.n_star;
  if (static_cast<int>(table.mean.size()) != n + 1) throw std::domain_error("oc_curve: table size mismatch");
  std::vector<OCRow> rows;
  rows.reserve(thetas.size());
  for (double theta : thetas) {
    if (!(theta > 0.0 && theta < 1.0)) throw std::domain_error("oc_curve: theta must lie in (0,1)");
    OCRow row;
    row.theta = theta;
    const auto control = binomial_pmf(n, theta);
    const auto null_tail = upper_tail(binomial_pmf(design.n_T, theta));
    const double theta_T = theta + design.effect;
    row.power_skipped = theta_T > 1.0 + 1e-12 || theta_T < -1e-12;
    std::vector<double> alt_tail;
    if (!row.power_skipped) alt_tail = upper_tail(binomial_pmf(design.n_T, std::clamp(theta_T, 0.0, 1.0)));
    double power = 0.0;
    for (int x = 0; x <= n; ++x) {
      const double p = control[x];
      const double err = table.mean[x] - theta;
      row.mse += p * err * err;
      row.pss += p * table.pss[x];
      row.type1 += p * null_tail[table.threshold[x]];
      if (!row.power_skipped) power += p * alt_tail[table.threshold[x]];
    }
    if (row.power_skipped) {
      row.power = std::numeric_limits<double>::quiet_NaN();
      row.rejection_ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
      row.power = power;
      row.rejection_ratio =
          row.type1 > 0.0 ? power / row.type1 : std::numeric_limits<double>::infinity();
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<OCRow> oc_curve(const PriorMethod& method, const HistoricalSet& hist,
                            const TrialDesign& design, const std::vector<double>& thetas,
                            std::uint64_t seed) {
  return oc_curve(tabulate_control(method, hist, design, prior_stream(seed, 0)), design, thetas);
}

std::vector<std::pair<double, double>> mse_curve(const PriorMethod& method, const HistoricalSet& hist,
                                                 const TrialDesign& design,
                                                 const std::vector<double>& thetas, std::uint64_t seed) {
  std::vector<std::pair<double, double>> out;
  for (const auto& row : oc_curve(method, hist, design, thetas, seed)) out.emplace_back(row.theta, row.mse);
  return out;
}

std::vector<PowerRow> power_type1_curve(const PriorMethod& method, const HistoricalSet& hist,
                                        const TrialDesign& design, const std::vector<double>& thetas,
                                        std::uint64_t seed) {
  std::vector<PowerRow> out;
  for (const auto& row : oc_curve(method, hist, design, thetas, seed)) {
    out.push_back({row.theta, row.power, row.type1, row.power_skipped});
  }
  return out;
}

std::vector<std::pair<double, double>> rejection_ratio_curve(const std::vector<PowerRow>& rows) {
  std::vector<std::pair<double, double>> out;
  for (const auto& r : rows) {
    double ratio;
    if (r.power_skipped) {
      ratio = std::numeric_limits<double>::quiet_NaN();
    } else if (r.type1 > 0.0) {
      ratio = r.power / r.type1;
    } else {
      ratio = std::numeric_limits<double>::infinity();
    }
    out.emplace_back(r.theta, ratio);
  }
  return out;
}

std::vector<double> theta_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo <= hi)) throw std::domain_error("theta grid: need lo <= hi and step > 0");
  if (!(lo > 0.0 && hi < 1.0)) throw std::domain_error("theta grid: values must lie in (0,1)");
  const auto count = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) grid.push_back(std::round((lo + k * step) * 1e12) / 1e12);
  return grid;
}

std::vector<double> default_theta_grid() { return theta_grid(0.30, 0.95, 0.01); }

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

void write_oc_csv(std::ostream& out, const std::vector<OCRow>& rows,
                  const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "theta,pss,mse,power,type1,rejection_ratio\n";
  for (const auto& r : rows) {
    out << format_number(r.theta) << ',' << format_number(r.pss) << ',' << format_number(r.mse) << ','
        << format_number(r.power) << ',' << format_number(r.type1) << ','
        << format_number(r.rejection_ratio) << '\n';
  }
}

nlohmann::json oc_rows_to_json(const std::vector<OCRow>& rows) {
  auto number = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"theta", r.theta},
                   {"pss", number(r.pss)},
                   {"mse", number(r.mse)},
                   {"power", number(r.power)},
                   {"type1", number(r.type1)},
                   {"rejection_ratio", std::isinf(r.rejection_ratio) ? nlohmann::json("inf")
                                                                      : number(r.rejection_ratio)},
                   {"power_skipped", r.power_skipped}});
  }
  return out;
}

}  // namespace histprior
