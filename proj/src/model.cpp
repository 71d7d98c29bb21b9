#include "treetune/model.hpp"

#include "treetune/error.hpp"

namespace treetune {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json trees_to_json(const std::vector<RegressionTree>& trees) {
    json out = json::array();
    for (const auto& t : trees) {
        json feature = json::array(), threshold = json::array(), left = json::array(),
             right = json::array(), value = json::array();
        for (const auto& n : t.nodes) {
            feature.push_back(n.feature);
            threshold.push_back(n.threshold);
            left.push_back(n.left);
            right.push_back(n.right);
            value.push_back(n.value);
        }
        out.push_back(json{{"feature", feature},
                           {"threshold", threshold},
                           {"left", left},
                           {"right", right},
                           {"value", value}});
    }
    return out;
}

std::vector<RegressionTree> trees_from_json(const json& j, std::size_t n_features) {
    std::vector<RegressionTree> trees;
    for (const auto& t : j) {
        const auto& feature = t.at("feature");
        const std::size_t count = feature.size();
        for (const char* key : {"threshold", "left", "right", "value"})
            if (t.at(key).size() != count) throw DataError("model file: ragged node arrays");
        RegressionTree tree;
        tree.nodes.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            TreeNode& n = tree.nodes[i];
            n.feature = t["feature"][i].get<std::int32_t>();
            n.threshold = t["threshold"][i].get<double>();
            n.left = t["left"][i].get<std::int32_t>();
            n.right = t["right"][i].get<std::int32_t>();
            n.value = t["value"][i].get<double>();
            if (!n.is_leaf()) {
                auto bad = [&](std::int32_t c) { return c <= static_cast<std::int32_t>(i) || c >= static_cast<std::int32_t>(count); };
                if (static_cast<std::size_t>(n.feature) >= n_features || bad(n.left) || bad(n.right))
                    throw DataError("model file: node " + std::to_string(i) + " has invalid links");
            }
        }
        if (count == 0) throw DataError("model file: empty tree");
        trees.push_back(std::move(tree));
    }
    return trees;
}

}  // namespace

std::string_view to_string(Algorithm a) { return a == Algorithm::rf ? "rf" : "gbt"; }

Algorithm parse_algorithm(std::string_view s) {
    if (s == "rf") return Algorithm::rf;
    if (s == "gbt") return Algorithm::gbt;
    throw ParamError("unknown algorithm '" + std::string(s) + "' (expected rf or gbt)");
}

Algorithm algorithm_of(const HyperParams& params) {
    return std::holds_alternative<RfHyperParams>(params) ? Algorithm::rf : Algorithm::gbt;
}

Algorithm algorithm_of(const Model& model) {
    return std::holds_alternative<Forest>(model) ? Algorithm::rf : Algorithm::gbt;
}

void validate(const HyperParams& params) {
    std::visit([](const auto& p) { p.validate(); }, params);
}

Model fit(const Dataset& train, const HyperParams& params, std::uint64_t seed, std::size_t workers) {
    return std::visit(overloaded{
                          [&](const RfHyperParams& p) -> Model { return fit_forest(train, p, seed, workers); },
                          [&](const GbtHyperParams& p) -> Model { return fit_gbt(train, p, seed); },
                      },
                      params);
}

std::vector<double> predict(const Model& model, const Matrix& features) {
    return std::visit(overloaded{
                          [&](const Forest& m) { return predict(m, features); },
                          [&](const BoostedModel& m) { return predict_gbt(m, features); },
                      },
                      model);
}

json params_to_json(const HyperParams& params) {
    return std::visit(
        overloaded{
            [](const RfHyperParams& p) {
                json j;
                j["algorithm"] = "rf";
                if (p.mtry_fraction)
                    j["mtry"] = *p.mtry_fraction;
                else
                    j["mtry"] = "sqrt";
                j["num_trees"] = p.num_trees;
                j["replace"] = p.replace;
                j["min_node_size"] = p.min_node_size_exponent;
                j["sample_fraction"] = p.sample_fraction;
                return j;
            },
            [](const GbtHyperParams& p) {
                json j;
                j["algorithm"] = "gbt";
                j["nrounds"] = p.nrounds;
                j["eta"] = p.eta;
                j["subsample"] = p.subsample;
                j["max_depth"] = p.max_depth;
                j["min_child_weight"] = p.min_child_weight;
                j["colsample_bytree"] = p.colsample_bytree;
                j["alpha"] = p.alpha;
                j["lambda"] = p.lambda;
                return j;
            },
        },
        params);
}

HyperParams params_from_json(const json& j) {
    try {
        const Algorithm a = parse_algorithm(j.at("algorithm").get<std::string>());
        if (a == Algorithm::rf) {
            RfHyperParams p;
            const auto& mtry = j.at("mtry");
            if (mtry.is_string()) {
                if (mtry.get<std::string>() != "sqrt") throw ParamError("mtry must be a number or \"sqrt\"");
                p.mtry_fraction.reset();
            } else {
                p.mtry_fraction = mtry.get<double>();
            }
            p.num_trees = j.at("num_trees").get<int>();
            p.replace = j.at("replace").get<bool>();
            p.min_node_size_exponent = j.at("min_node_size").get<double>();
            p.sample_fraction = j.at("sample_fraction").get<double>();
            p.validate();
            return p;
        }
        GbtHyperParams p;
        p.nrounds = j.at("nrounds").get<int>();
        p.eta = j.at("eta").get<double>();
        p.subsample = j.at("subsample").get<double>();
        p.max_depth = j.at("max_depth").get<int>();
        p.min_child_weight = j.at("min_child_weight").get<double>();
        p.colsample_bytree = j.at("colsample_bytree").get<double>();
        p.alpha = j.at("alpha").get<double>();
        p.lambda = j.at("lambda").get<double>();
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw ParamError(std::string("malformed hyperparameter JSON: ") + e.what());
    }
}

json score_to_json(const ScoreReport& s) {
    return json{{"nse", s.nse}, {"kge", s.kge}, {"r", s.r}, {"alpha", s.alpha}, {"beta", s.beta}};
}

ScoreReport score_from_json(const json& j) {
    return ScoreReport{j.at("nse").get<double>(), j.at("kge").get<double>(), j.at("r").get<double>(),
                       j.at("alpha").get<double>(), j.at("beta").get<double>()};
}

json model_to_json(const Model& model) {
    json j;
    j["format"] = "treetune-model";
    j["version"] = kModelFormatVersion;
    std::visit(overloaded{
                   [&](const Forest& f) {
                       j["algorithm"] = "rf";
                       j["params"] = params_to_json(f.params);
                       j["seed"] = f.seed;
                       j["n_features"] = f.n_features;
                       j["trees"] = trees_to_json(f.trees);
                   },
                   [&](const BoostedModel& m) {
                       j["algorithm"] = "gbt";
                       j["params"] = params_to_json(m.params);
                       j["seed"] = m.seed;
                       j["n_features"] = m.n_features;
                       j["base_score"] = m.base_score;
                       j["trees"] = trees_to_json(m.trees);
                   },
               },
               model);
    return j;
}

Model model_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != "treetune-model")
            throw DataError("not a treetune model file");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw DataError("unsupported model format version " + std::to_string(j["version"].get<int>()));
        const Algorithm a = parse_algorithm(j.at("algorithm").get<std::string>());
        const auto p = j.at("n_features").get<std::size_t>();
        if (a == Algorithm::rf) {
            Forest f;
            f.params = std::get<RfHyperParams>(params_from_json(j.at("params")));
            f.seed = j.at("seed").get<std::uint64_t>();
            f.n_features = p;
            f.trees = trees_from_json(j.at("trees"), p);
            return f;
        }
        BoostedModel m;
        m.params = std::get<GbtHyperParams>(params_from_json(j.at("params")));
        m.seed = j.at("seed").get<std::uint64_t>();
        m.n_features = p;
        m.base_score = j.at("base_score").get<double>();
        m.trees = trees_from_json(j.at("trees"), p);
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model file: ") + e.what());
    } catch (const std::bad_variant_access&) {
        throw DataError("model file: params do not match the algorithm tag");
    }
}

}  // namespace treetune
