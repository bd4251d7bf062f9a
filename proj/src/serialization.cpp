#include "histprior/serialization.hpp"

#include <charconv>
#include <stdexcept>

namespace histprior {

using nlohmann::json;

json to_json(const StudyResult& s) { return json{{"events", s.events}, {"size", s.size}}; }

StudyResult study_result_from_json(const json& j) {
  return StudyResult(j.at("events").get<int>(), j.at("size").get<int>());
}

json to_json(const HistoricalSet& hist) {
  json studies = json::array();
  for (const auto& s : hist.studies) studies.push_back(to_json(s));
  json out{{"studies", studies}};
  if (!hist.labels.empty()) out["labels"] = hist.labels;
  return out;
}

HistoricalSet historical_set_from_json(const json& j) {
  std::vector<StudyResult> studies;
  for (const auto& s : j.at("studies")) studies.push_back(study_result_from_json(s));
  std::vector<std::string> labels;
  if (j.contains("labels") && !j.at("labels").is_null()) {
    labels = j.at("labels").get<std::vector<std::string>>();
  }
  return HistoricalSet(std::move(studies), std::move(labels));
}

json to_json(const BetaMixture& m) {
  json alphas = json::array(), betas = json::array();
  for (const auto& c : m.components()) {
    alphas.push_back(c.alpha);
    betas.push_back(c.beta);
  }
  return json{{"weights", m.weights()}, {"alphas", alphas}, {"betas", betas}};
}

BetaMixture beta_mixture_from_json(const json& j) {
  auto weights = j.at("weights").get<std::vector<double>>();
  const auto alphas = j.at("alphas").get<std::vector<double>>();
  const auto betas = j.at("betas").get<std::vector<double>>();
  if (alphas.size() != weights.size() || betas.size() != weights.size()) {
    throw std::domain_error("mixture JSON: weights, alphas and betas differ in length");
  }
  std::vector<BetaComponent> components;
  for (std::size_t k = 0; k < alphas.size(); ++k) components.emplace_back(alphas[k], betas[k]);
  return BetaMixture(std::move(weights), std::move(components));
}

StudyResult parse_study_result(const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) throw std::invalid_argument("expected x/n, got '" + text + "'");
  int x = 0, n = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto rx = std::from_chars(begin, begin + slash, x);
  auto rn = std::from_chars(begin + slash + 1, end, n);
  if (rx.ec != std::errc{} || rx.ptr != begin + slash || rn.ec != std::errc{} || rn.ptr != end) {
    throw std::invalid_argument("expected x/n, got '" + text + "'");
  }
  return StudyResult(x, n);
}

}  // namespace histprior
