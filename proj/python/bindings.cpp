#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "histprior/cli.hpp"
#include "histprior/map_prior.hpp"
#include "histprior/normal_model.hpp"
#include "histprior/oc_engine.hpp"
#include "histprior/power_prior.hpp"
#include "histprior/sim_harness.hpp"

namespace py = pybind11;
using namespace histprior;

namespace {

HistoricalSet hist_of(const std::vector<StudyResult>& studies) { return HistoricalSet(studies); }

py::dict fit_to_dict(const MixtureFit& fit) {
  py::dict d;
  d["mixture"] = fit.mixture;
  d["ise"] = fit.ise;
  d["tv"] = fit.tv;
  d["good"] = fit.good;
  return d;
}

PriorMethod method_of(const std::string& name, double rho) { return PriorMethod::parse(name, rho); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Historical-control priors for binomial trials";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<StudyResult>(m, "StudyResult")
      .def(py::init<int, int>(), py::arg("events"), py::arg("size"))
      .def(py::init([](const py::tuple& t) {
        if (t.size() != 2) throw py::value_error("expected (events, size)");
        return StudyResult(t[0].cast<int>(), t[1].cast<int>());
      }))
      .def_readonly("events", &StudyResult::events)
      .def_readonly("size", &StudyResult::size)
      .def("proportion", &StudyResult::proportion)
      .def("__eq__", [](const StudyResult& a, const StudyResult& b) { return a == b; })
      .def("__repr__", [](const StudyResult& s) {
        return "StudyResult(" + std::to_string(s.events) + ", " + std::to_string(s.size) + ")";
      });
  py::implicitly_convertible<py::tuple, StudyResult>();

  py::class_<BetaComponent>(m, "BetaComponent")
      .def(py::init<double, double>(), py::arg("alpha"), py::arg("beta"))
      .def_readonly("alpha", &BetaComponent::alpha)
      .def_readonly("beta", &BetaComponent::beta)
      .def("mean", &BetaComponent::mean)
      .def("variance", &BetaComponent::variance)
      .def("density", &BetaComponent::density)
      .def("__eq__", [](const BetaComponent& a, const BetaComponent& b) { return a == b; })
      .def("__repr__", [](const BetaComponent& c) {
        std::ostringstream s;
        s << "BetaComponent(" << c.alpha << ", " << c.beta << ")";
        return s.str();
      });

  py::class_<BetaMixture>(m, "BetaMixture")
      .def(py::init<>())
      .def(py::init<BetaComponent>())
      .def(py::init<std::vector<double>, std::vector<BetaComponent>>(), py::arg("weights"), py::arg("components"))
      .def_property_readonly("weights", &BetaMixture::weights)
      .def_property_readonly("components", &BetaMixture::components)
      .def("__len__", &BetaMixture::size)
      .def("density", [](const BetaMixture& mix, double t) { return mixture_density(mix, t); })
      .def("mean", [](const BetaMixture& mix) { return mixture_mean(mix); })
      .def("variance", [](const BetaMixture& mix) { return mixture_variance(mix); })
      .def("posterior", [](const BetaMixture& mix, const StudyResult& s) { return mixture_posterior(mix, s); })
      .def("prior_sample_size", [](const BetaMixture& mix) { return prior_sample_size(mix); });

  py::class_<NormalDist>(m, "NormalDist")
      .def_readonly("mean", &NormalDist::mean)
      .def_readonly("variance", &NormalDist::variance);

  py::class_<NormalStudy>(m, "NormalStudy")
      .def(py::init([](double estimate, double variance) { return NormalStudy{estimate, variance}; }),
           py::arg("estimate"), py::arg("variance"))
      .def_readonly("estimate", &NormalStudy::estimate)
      .def_readonly("variance", &NormalStudy::variance);

  py::class_<TrialDesign>(m, "TrialDesign")
      .def(py::init([](int n_star, int n_T, double effect, double threshold) {
             TrialDesign d{n_star, n_T, effect, threshold};
             d.validate();
             return d;
           }),
           py::arg("n_star") = 200, py::arg("n_T") = 200, py::arg("effect") = 0.12, py::arg("threshold") = 0.975)
      .def_readonly("n_star", &TrialDesign::n_star)
      .def_readonly("n_T", &TrialDesign::n_T)
      .def_readonly("effect", &TrialDesign::effect)
      .def_readonly("threshold", &TrialDesign::threshold);

  py::class_<OCRow>(m, "OCRow")
      .def_readonly("theta", &OCRow::theta)
      .def_readonly("pss", &OCRow::pss)
      .def_readonly("mse", &OCRow::mse)
      .def_readonly("power", &OCRow::power)
      .def_readonly("type1", &OCRow::type1)
      .def_readonly("rejection_ratio", &OCRow::rejection_ratio)
      .def_readonly("power_skipped", &OCRow::power_skipped);

  py::class_<AggregatedOC>(m, "AggregatedOC")
      .def_readonly("rows", &AggregatedOC::rows)
      .def_readonly("replicates", &AggregatedOC::replicates)
      .def_readonly("skipped", &AggregatedOC::skipped)
      .def_readonly("zero_ratio_floors", &AggregatedOC::zero_ratio_floors);

  py::class_<ScenarioSpec>(m, "ScenarioSpec")
      .def_static("scenario1", &ScenarioSpec::scenario1)
      .def_static("scenario2", &ScenarioSpec::scenario2)
      .def_readwrite("n_hist_studies", &ScenarioSpec::n_hist_studies)
      .def_readwrite("hist_size", &ScenarioSpec::hist_size)
      .def_readwrite("base_prob", &ScenarioSpec::base_prob)
      .def_readwrite("re_sd", &ScenarioSpec::re_sd)
      .def_readwrite("n_star", &ScenarioSpec::n_star)
      .def_readwrite("n_T", &ScenarioSpec::n_T)
      .def_readwrite("reps", &ScenarioSpec::reps)
      .def_readwrite("seed", &ScenarioSpec::seed)
      .def_readwrite("effect", &ScenarioSpec::effect)
      .def_readwrite("threshold", &ScenarioSpec::threshold);

  m.def("conditional_power_prior", [](const std::vector<StudyResult>& hist, const std::vector<double>& delta) {
    return conditional_power_prior(hist_of(hist), WeightVector(delta));
  }, py::arg("hist"), py::arg("delta"));
  m.def("delta_log_marginal_likelihood",
        [](const std::vector<StudyResult>& hist, const std::vector<double>& delta, const StudyResult& current) {
          return delta_log_marginal_likelihood(hist_of(hist), WeightVector(delta), current);
        }, py::arg("hist"), py::arg("delta"), py::arg("current"));
  m.def("eb_combined", [](const std::vector<StudyResult>& hist, const StudyResult& current) {
    return eb_combined(hist_of(hist), current).delta;
  }, py::arg("hist"), py::arg("current"));
  m.def("eb_separate", [](const std::vector<StudyResult>& hist, const StudyResult& current) {
    return eb_separate(hist_of(hist), current).delta;
  }, py::arg("hist"), py::arg("current"));
  m.def("eb_pooled", [](const std::vector<StudyResult>& hist, const StudyResult& current) {
    return eb_pooled(hist_of(hist), current).delta;
  }, py::arg("hist"), py::arg("current"));
  m.def("fb_power_prior",
        [](const std::vector<StudyResult>& hist, double rho, int draws, std::uint64_t seed) {
          SeededStream stream = prior_stream(seed, 0);
          return fb_power_prior(hist_of(hist), CopulaSpec{rho, draws}, stream);
        }, py::arg("hist"), py::arg("rho") = 0.0, py::arg("draws") = 1000, py::arg("seed") = 20240601);

  m.def("map_predictive_prior", [](const std::vector<StudyResult>& hist, double tau_scale) {
    MapConfig cfg;
    cfg.tau_halfnormal_scale = tau_scale;
    const DensityGrid g = map_predictive_prior(hist_of(hist), cfg);
    return std::make_pair(g.thetas, g.densities);
  }, py::arg("hist"), py::arg("tau_scale") = 1.0);
  m.def("fit_beta_mixture",
        [](const std::vector<double>& thetas, const std::vector<double>& densities, int max_components) {
          return fit_to_dict(fit_beta_mixture(DensityGrid{thetas, densities}, max_components));
        }, py::arg("thetas"), py::arg("densities"), py::arg("max_components") = 3);
  m.def("robustify", &robustify, py::arg("mixture"), py::arg("vague_weight") = 0.1);

  m.def("normal_power_posterior", [](const std::vector<NormalStudy>& studies, const std::vector<double>& delta) {
    return normal_power_posterior(studies, WeightVector(delta));
  }, py::arg("studies"), py::arg("delta"));
  m.def("bias_model_posterior", &bias_model_posterior, py::arg("studies"), py::arg("tau_sq"));
  m.def("normal_map_prior", &normal_map_prior, py::arg("studies"), py::arg("tau_sq"));

  m.def("build_prior",
        [](const std::string& method, const std::vector<StudyResult>& hist, std::optional<StudyResult> current,
           double rho, std::uint64_t seed) {
          return build_prior(method_of(method, rho), hist_of(hist), current, prior_stream(seed, 0));
        }, py::arg("method"), py::arg("hist"), py::arg("current") = std::nullopt, py::arg("rho") = 0.0,
        py::arg("seed") = 20240601);
  m.def("prior_sample_size", &prior_sample_size, py::arg("mixture"));
  m.def("prob_treatment_better",
        py::overload_cast<const BetaMixture&, int, int>(&prob_treatment_better),
        py::arg("control"), py::arg("x_T"), py::arg("n_T"));
  m.def("decision", &decision, py::arg("control"), py::arg("x_T"), py::arg("design") = TrialDesign{});
  m.def("oc_curve",
        [](const std::string& method, const std::vector<StudyResult>& hist, const TrialDesign& design,
           const std::vector<double>& thetas, double rho, std::uint64_t seed) {
          return oc_curve(method_of(method, rho), hist_of(hist), design, thetas, seed);
        }, py::arg("method"), py::arg("hist"), py::arg("design") = TrialDesign{}, py::arg("thetas"),
        py::arg("rho") = 0.0, py::arg("seed") = 20240601);
  m.def("theta_grid", &theta_grid, py::arg("lo"), py::arg("hi"), py::arg("step"));

  m.def("default_methods", []() {
    std::vector<std::string> labels;
    for (const auto& method : default_methods()) labels.push_back(method.label());
    return labels;
  });
  m.def("run_scenario",
        [](const ScenarioSpec& spec, const std::vector<double>& thetas, int threads) {
          py::gil_scoped_release release;
          return run_scenario(spec, default_methods(), thetas, threads);
        }, py::arg("spec"), py::arg("thetas"), py::arg("threads") = 1);

  m.def("run_cli", [](std::vector<std::string> args, const std::string& input) {
    args.insert(args.begin(), "histprior");
    std::istringstream in(input);
    std::ostringstream out, err;
    const int code = run_cli(args, in, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), py::arg("input") = "");
}
