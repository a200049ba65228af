#pragma once

// JSON mapping for the configuration structs shared by the C API and the
// reproducibility manifest. Keys are lower_snake_case; unknown keys are ignored
// and missing keys keep their defaults.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "graphlime/evaluation.hpp"
#include "graphlime/explainers.hpp"
#include "graphlime/predictor.hpp"
#include "graphlime/synthetic.hpp"

namespace graphlime::config {

using Json = nlohmann::ordered_json;

Json to_json(const ExplainerConfig& c);
ExplainerConfig explainer_from_json(const Json& j);

Json to_json(const GnnHyperParams& h);
GnnHyperParams hyper_from_json(const Json& j);

Json to_json(const SyntheticParams& p);
SyntheticParams synthetic_from_json(const Json& j);

Json to_json(const SetupConfig& c);
SetupConfig setup_from_json(const Json& j);

Json to_json(const TrustExperimentConfig& c);
TrustExperimentConfig trust_from_json(const Json& j);

Json to_json(const ModelSelectionConfig& c);
ModelSelectionConfig model_selection_from_json(const Json& j);

/// Parses a JSON document, mapping syntax errors to ErrorCode::parse.
Json parse(const std::string& text, const char* what);

}  // namespace graphlime::config
