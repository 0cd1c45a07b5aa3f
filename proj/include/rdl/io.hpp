#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "rdl/operator.hpp"
#include "rdl/randfield.hpp"

namespace rdl {

nlohmann::json to_json(const ModelParams& p);
nlohmann::json to_json(const PotentialSpec& s);
nlohmann::json to_json(const GridSpec& g);
nlohmann::json to_json(const TruncationPolicy& t);

/// Strict readers: unknown keys raise ConfigError naming the dotted path under `where`.
ModelParams model_params_from_json(const nlohmann::json& j, const std::string& where = "params");
PotentialSpec potential_spec_from_json(const nlohmann::json& j, const std::string& where = "spec");
GridSpec grid_spec_from_json(const nlohmann::json& j, const std::string& where = "grid");
TruncationPolicy truncation_from_json(const nlohmann::json& j,
                                      const std::string& where = "truncation");

/// Rejects keys of `j` outside `allowed`.
void require_known_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                        const std::string& where);

/// Shortest round-trip decimal form ("%.17g").
std::string format_double(double v);

}  // namespace rdl
