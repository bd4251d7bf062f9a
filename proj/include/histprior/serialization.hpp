#pragma once

#include <json.hpp>

#include "histprior/data_model.hpp"

namespace histprior {

// {"studies":[{"events":x,"size":n},...], "labels":[...]}
nlohmann::json to_json(const HistoricalSet& hist);
HistoricalSet historical_set_from_json(const nlohmann::json& j);

// {"weights":[...], "alphas":[...], "betas":[...]}
nlohmann::json to_json(const BetaMixture& m);
BetaMixture beta_mixture_from_json(const nlohmann::json& j);

nlohmann::json to_json(const StudyResult& s);
StudyResult study_result_from_json(const nlohmann::json& j);

/// Parses "x/n".
StudyResult parse_study_result(const std::string& text);

}  // namespace histprior
