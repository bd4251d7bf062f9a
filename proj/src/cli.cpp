#include "histprior/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "histprior/data_model.hpp"
#include "histprior/map_prior.hpp"
#include "histprior/oc_engine.hpp"
#include "histprior/serialization.hpp"
#include "histprior/sim_harness.hpp"

namespace histprior {
namespace {

using nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 20240601;

struct Options {
  std::string input = "-";
  std::string output = "-";
  std::string method = "none";
  double rho = 0.0;
  int draws = 1000;
  double tau_scale = 1.0;
  double vague_weight = 0.1;
  std::string new_data;
  std::string data;
  int n_star = 200;
  int n_T = 200;
  double effect = 0.12;
  double threshold = 0.975;
  std::string theta_grid = "0.30:0.95:0.01";
  int reps = 0;
  int scenario = 0;
  std::uint64_t seed = kDefaultSeed;
  std::string format = "csv";
  int threads = 1;
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json(const std::string& path, std::istream& in) {
  try {
    if (path == "-") return json::parse(in);
    std::ifstream file(path);
    if (!file) throw UsageError("cannot open input '" + path + "'");
    return json::parse(file);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("malformed JSON input: ") + e.what());
  }
}

template <typename Fn>
void with_output(const std::string& path, std::ostream& out, Fn&& write) {
  if (path == "-") {
    write(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw UsageError("cannot open output '" + path + "'");
  write(file);
}

PriorMethod make_method(const Options& o) {
  PriorMethod m = PriorMethod::parse(o.method, o.rho);
  m.draws = o.draws;
  m.map.tau_halfnormal_scale = o.tau_scale;
  m.vague_weight = o.vague_weight;
  m.validate();
  return m;
}

TrialDesign make_design(const Options& o) {
  TrialDesign d;
  d.n_star = o.n_star;
  d.n_T = o.n_T;
  d.effect = o.effect;
  d.threshold = o.threshold;
  d.validate();
  return d;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad --theta-grid '" + text + "'; expected lo:hi:step");
    }
  }
  if (parts.size() == 1) return theta_grid(parts[0], parts[0], 1.0);
  if (parts.size() != 3) throw UsageError("bad --theta-grid '" + text + "'; expected lo:hi:step");
  return theta_grid(parts[0], parts[1], parts[2]);
}

json summary(const BetaMixture& m) {
  return {{"mean", mixture_mean(m)},
          {"variance", mixture_variance(m)},
          {"prior_sample_size", prior_sample_size(m)}};
}

int cmd_prior(const Options& o, std::istream& in, std::ostream& out) {
  const HistoricalSet hist = historical_set_from_json(read_json(o.input, in));
  const PriorMethod method = make_method(o);
  std::optional<StudyResult> current;
  if (!o.new_data.empty()) current = parse_study_result(o.new_data);
  if (method.adaptive() && !current) throw UsageError(method.name() + " needs --new x/n");

  json doc = {{"seed", o.seed}, {"method", method.label()}};
  std::optional<BetaMixture> map_cache;
  if (method.kind == PriorKind::MAP || method.kind == PriorKind::MAPRobust) {
    const MixtureFit fit = fit_beta_mixture(map_predictive_prior(hist, method.map), method.max_components);
    doc["fit"] = {{"ise", fit.ise}, {"tv", fit.tv}, {"good", fit.good}};
    map_cache = fit.mixture;
  }
  const BetaMixture prior = build_prior(method, hist, current, prior_stream(o.seed, 0), &map_cache);
  if (method.adaptive()) doc["eb_weights"] = eb_weights(method.kind, hist, *current).delta;
  doc["mixture"] = to_json(prior);
  doc["summary"] = summary(prior);
  with_output(o.output, out, [&](std::ostream& s) { s << doc.dump(2) << '\n'; });
  return kExitOk;
}

int cmd_posterior(const Options& o, std::istream& in, std::ostream& out) {
  if (o.data.empty()) throw UsageError("posterior needs --data x/n");
  const json input = read_json(o.input, in);
  const BetaMixture prior = beta_mixture_from_json(input.contains("mixture") ? input.at("mixture") : input);
  const BetaMixture post = mixture_posterior(prior, parse_study_result(o.data));
  const json doc = {{"seed", o.seed}, {"mixture", to_json(post)}, {"summary", summary(post)}};
  with_output(o.output, out, [&](std::ostream& s) { s << doc.dump(2) << '\n'; });
  return kExitOk;
}

int cmd_oc(const Options& o, std::istream& in, std::ostream& out) {
  const HistoricalSet hist = historical_set_from_json(read_json(o.input, in));
  const PriorMethod method = make_method(o);
  const TrialDesign design = make_design(o);
  const auto thetas = parse_grid(o.theta_grid);
  const auto rows = oc_curve(method, hist, design, thetas, o.seed);
  with_output(o.output, out, [&](std::ostream& s) {
    if (o.format == "json") {
      const json doc = {{"seed", o.seed}, {"method", method.label()}, {"rows", oc_rows_to_json(rows)}};
      s << doc.dump(2) << '\n';
    } else {
      write_oc_csv(s, rows, {"method " + method.label(), "seed " + std::to_string(o.seed)});
    }
  });
  return kExitOk;
}

int cmd_simulate(const Options& o, std::istream& in, std::ostream& out, bool input_given, bool seed_given) {
  if (o.output == "-") throw UsageError("simulate needs --output DIR");
  ScenarioSpec spec;
  if (o.scenario == 2) {
    spec = ScenarioSpec::scenario2();
  } else if (o.scenario == 0 && input_given) {
    spec = scenario_spec_from_json(read_json(o.input, in));
  }
  if (o.reps > 0) spec.reps = o.reps;
  if (seed_given) spec.seed = o.seed;
  spec.effect = o.effect;
  spec.threshold = o.threshold;
  spec.validate();
  const auto thetas = parse_grid(o.theta_grid);
  const auto results = run_scenario(spec, default_methods(), thetas, o.threads);
  write_scenario_outputs(o.output, spec, thetas, results);
  out << "wrote " << results.size() << " method tables to " << o.output << " (seed " << spec.seed
      << ", " << spec.reps << " replicates)\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Historical-control priors and trial operating characteristics", "histprior"};
  app.require_subcommand(1);

  auto add_method = [&](CLI::App* cmd) {
    cmd->add_option("--method", o.method, "none, eb-combined, eb-separate, eb-pooled, fb-copula, fb-pooled, map, map-robust")
        ->capture_default_str();
    cmd->add_option("--rho", o.rho, "Copula correlation for fb-copula")->capture_default_str();
    cmd->add_option("--draws", o.draws, "Weight draws for the FB priors")->capture_default_str();
    cmd->add_option("--tau-scale", o.tau_scale, "Half-normal scale of the MAP heterogeneity prior")
        ->capture_default_str();
    cmd->add_option("--vague-weight", o.vague_weight, "Be(1,1) weight for map-robust")->capture_default_str();
  };
  auto add_design = [&](CLI::App* cmd) {
    cmd->add_option("--effect", o.effect, "Treatment effect for power")->capture_default_str();
    cmd->add_option("--threshold", o.threshold, "Posterior probability needed to reject")
        ->capture_default_str();
    cmd->add_option("--theta-grid", o.theta_grid, "lo:hi:step, or a single value")->capture_default_str();
  };
  auto add_io = [&](CLI::App* cmd) {
    cmd->add_option("--input,-i", o.input, "Input JSON path, '-' for stdin")->capture_default_str();
    cmd->add_option("--output,-o", o.output, "Output path, '-' for stdout")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  };

  CLI::App* prior = app.add_subcommand("prior", "Build a control-arm prior from historical studies");
  add_io(prior);
  add_method(prior);
  prior->add_option("--new", o.new_data, "Current control result x/n (EB methods)");

  CLI::App* posterior = app.add_subcommand("posterior", "Update a beta-mixture prior with data");
  add_io(posterior);
  posterior->add_option("--data", o.data, "Observed result x/n")->required();

  CLI::App* oc = app.add_subcommand("oc", "Exact operating characteristics for one historical set");
  add_io(oc);
  add_method(oc);
  add_design(oc);
  oc->add_option("--n-star", o.n_star, "Control arm size")->capture_default_str();
  oc->add_option("--n-T", o.n_T, "Treatment arm size")->capture_default_str();
  oc->add_option("--format", o.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  CLI::App* simulate = app.add_subcommand("simulate", "Replicated scenario study over the default methods");
  add_io(simulate);
  add_design(simulate);
  simulate->add_option("--scenario", o.scenario, "Preset 1 or 2 instead of --input")
      ->check(CLI::IsMember({1, 2}));
  simulate->add_option("--reps", o.reps, "Replicates (overrides the spec)");
  simulate->add_option("--threads", o.threads, "Worker threads; results do not depend on it")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (prior->parsed()) return cmd_prior(o, in, out);
    if (posterior->parsed()) return cmd_posterior(o, in, out);
    if (oc->parsed()) return cmd_oc(o, in, out);
    return cmd_simulate(o, in, out, simulate->count("--input") > 0, simulate->count("--seed") > 0);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace histprior
