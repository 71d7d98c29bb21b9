#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "treetune/gbt.hpp"
#include "treetune/metrics.hpp"
#include "treetune/rf.hpp"

namespace treetune {

enum class Algorithm { rf, gbt };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view s);

using HyperParams = std::variant<RfHyperParams, GbtHyperParams>;
using Model = std::variant<Forest, BoostedModel>;

Algorithm algorithm_of(const HyperParams& params);
Algorithm algorithm_of(const Model& model);
void validate(const HyperParams& params);

/// Fits the engine matching the parameter type.
Model fit(const Dataset& train, const HyperParams& params, std::uint64_t seed, std::size_t workers = 1);
std::vector<double> predict(const Model& model, const Matrix& features);

using json = nlohmann::ordered_json;

/// {"algorithm": "rf"|"gbt", ...fields}. The sqrt(p) mtry rule is written as
/// "mtry": "sqrt".
json params_to_json(const HyperParams& params);
HyperParams params_from_json(const json& j);

json score_to_json(const ScoreReport& s);
ScoreReport score_from_json(const json& j);

inline constexpr int kModelFormatVersion = 1;

/// Versioned model file: format tag, version, algorithm, params, seed,
/// feature count and the flattened node arrays of every tree.
json model_to_json(const Model& model);
Model model_from_json(const json& j);

}  // namespace treetune
