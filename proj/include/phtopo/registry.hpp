#pragma once

#include "phtopo/models.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace phtopo {

struct ParamSchema {
  std::string name;
  std::string type; // number | integer | boolean | complex_list | coefficient_table
  nlohmann::json default_value;
  std::string description;
};

struct ModelEntry {
  std::string name;
  std::string description;
  std::vector<ParamSchema> params;
  std::function<BlochModel(const nlohmann::json&)> build; // params with defaults filled in
};

/// All models addressable by name. Every entry also accepts "onsite", a list
/// of [re, im] pairs added to the diagonal.
const std::vector<ModelEntry>& model_registry();

const ModelEntry& find_model(const std::string& name);

/// Builds a model from a JSON parameter object. Unknown keys and values of
/// the wrong type raise InvalidParams.
BlochModel make_model(const std::string& name, const nlohmann::json& params = nlohmann::json::object(),
                      std::optional<SpaceTopology> topology = std::nullopt);

/// Parameter object with defaults filled in and `onsite` kept if present.
nlohmann::json resolve_params(const std::string& name, const nlohmann::json& params);

/// Registry listing for the `models` subcommand.
nlohmann::json registry_json();

/// Complex number from a JSON number or [re, im].
cd complex_from_json(const nlohmann::json& j);

} // namespace phtopo
