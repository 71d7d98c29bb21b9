#include "treetune/hpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "treetune/error.hpp"
#include "treetune/parallel.hpp"
#include "treetune/rng.hpp"
#include "treetune/util.hpp"

namespace treetune {

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::default_params: return "default";
        case Strategy::opt_default: return "opt_default";
        case Strategy::random: return "random";
        case Strategy::meta: return "meta";
    }
    return "?";
}

Strategy parse_strategy(std::string_view s) {
    if (s == "default") return Strategy::default_params;
    if (s == "opt_default") return Strategy::opt_default;
    if (s == "random") return Strategy::random;
    if (s == "meta") return Strategy::meta;
    throw ParamError("unknown strategy '" + std::string(s) +
                     "' (expected default, opt_default, random or meta)");
}

HyperParams default_params(Algorithm algorithm) {
    if (algorithm == Algorithm::rf) {
        RfHyperParams p;
        p.mtry_fraction.reset();
        p.num_trees = 500;
        p.replace = true;
        p.min_node_size_exponent = 0.0;
        p.sample_fraction = 1.0;
        return p;
    }
    GbtHyperParams p;
    p.nrounds = 500;
    p.eta = 0.3;
    p.subsample = 1.0;
    p.max_depth = 6;
    p.min_child_weight = 1.0;
    p.colsample_bytree = 1.0;
    p.alpha = 0.0;
    p.lambda = 1.0;
    return p;
}

HyperParams optimal_default_params(Algorithm algorithm) {
    if (algorithm == Algorithm::rf) {
        RfHyperParams p;
        p.mtry_fraction = 0.257;
        p.num_trees = 983;
        p.replace = false;
        p.min_node_size_exponent = 0.0;  // node size 1
        p.sample_fraction = 0.703;
        return p;
    }
    GbtHyperParams p;
    p.nrounds = 4168;
    p.eta = 0.018;
    p.subsample = 0.839;
    p.max_depth = 13;
    p.min_child_weight = 2.06;
    p.colsample_bytree = 0.752;
    p.alpha = 1.113;
    p.lambda = 0.982;
    return p;
}

SearchSpace SearchSpace::for_algorithm(Algorithm algorithm) {
    SearchSpace s;
    s.algorithm = algorithm;
    if (algorithm == Algorithm::rf) {
        s.dimensions = {
            {"mtry", Scale::linear, 0.1, 1.0},
            {"num_trees", Scale::integer, 10, 2000},
            {"replace", Scale::boolean, 0, 1},
            {"min_node_size", Scale::exponent_of_n, 0.0, 1.0},
            {"sample_fraction", Scale::linear, 0.1, 1.0},
        };
    } else {
        s.dimensions = {
            {"nrounds", Scale::integer, 1, 5000},
            {"eta", Scale::log2, -10, 0},
            {"subsample", Scale::linear, 0.1, 1.0},
            {"max_depth", Scale::integer, 1, 15},
            {"min_child_weight", Scale::log2, 0, 7},
            {"colsample_bytree", Scale::open_unit, 0.0, 1.0},
            {"alpha", Scale::log2, -10, 10},
            {"lambda", Scale::log2, -10, 10},
        };
    }
    return s;
}

namespace {

double draw(const SearchDimension& d, Rng& rng) {
    switch (d.scale) {
        case Scale::linear:
        case Scale::exponent_of_n: return rng.uniform(d.lo, d.hi);
        case Scale::open_unit: return d.lo + (d.hi - d.lo) * rng.uniform_open_closed();
        case Scale::integer:
            return static_cast<double>(rng.integer(static_cast<std::int64_t>(d.lo), static_cast<std::int64_t>(d.hi)));
        case Scale::log2: return std::exp2(rng.uniform(d.lo, d.hi));
        case Scale::boolean: return rng.coin() ? 1.0 : 0.0;
    }
    return 0.0;
}

bool inside(const SearchDimension& d, double v) {
    switch (d.scale) {
        case Scale::linear:
        case Scale::exponent_of_n: return v >= d.lo && v <= d.hi;
        case Scale::open_unit: return v > d.lo && v <= d.hi;
        case Scale::integer: return v >= d.lo && v <= d.hi && v == std::floor(v);
        case Scale::log2: return v >= std::exp2(d.lo) && v <= std::exp2(d.hi);
        case Scale::boolean: return v == 0.0 || v == 1.0;
    }
    return false;
}

std::vector<double> field_values(const HyperParams& params, std::size_t p_for_sqrt) {
    if (const auto* rf = std::get_if<RfHyperParams>(&params))
        return {rf->resolved_mtry_fraction(p_for_sqrt), static_cast<double>(rf->num_trees),
                rf->replace ? 1.0 : 0.0, rf->min_node_size_exponent, rf->sample_fraction};
    const auto& g = std::get<GbtHyperParams>(params);
    return {static_cast<double>(g.nrounds), g.eta, g.subsample, static_cast<double>(g.max_depth),
            g.min_child_weight, g.colsample_bytree, g.alpha, g.lambda};
}

}  // namespace

bool SearchSpace::contains(const HyperParams& params, std::size_t n_rows) const {
    if (algorithm_of(params) != algorithm) return false;
    // The sqrt(p) rule is not a point of the space.
    if (const auto* rf = std::get_if<RfHyperParams>(&params)) {
        if (!rf->mtry_fraction) return false;
        const auto node = rf->effective_min_node_size(n_rows);
        if (node < 1 || node > n_rows) return false;
    }
    auto values = field_values(params, 1);
    for (std::size_t i = 0; i < dimensions.size(); ++i)
        if (!inside(dimensions[i], values[i])) return false;
    return true;
}

HyperParams sample_random(const SearchSpace& space, Rng& rng) {
    std::vector<double> v;
    v.reserve(space.dimensions.size());
    for (const auto& d : space.dimensions) v.push_back(draw(d, rng));
    if (space.algorithm == Algorithm::rf) {
        RfHyperParams p;
        p.mtry_fraction = v[0];
        p.num_trees = static_cast<int>(v[1]);
        p.replace = v[2] != 0.0;
        p.min_node_size_exponent = v[3];
        p.sample_fraction = v[4];
        return p;
    }
    GbtHyperParams p;
    p.nrounds = static_cast<int>(v[0]);
    p.eta = v[1];
    p.subsample = v[2];
    p.max_depth = static_cast<int>(v[3]);
    p.min_child_weight = v[4];
    p.colsample_bytree = v[5];
    p.alpha = v[6];
    p.lambda = v[7];
    return p;
}

HyperParams sample_random(const SearchSpace& space, std::uint64_t seed) {
    Rng rng(seed);
    return sample_random(space, rng);
}

std::size_t TrialRecord::failed_folds() const {
    return static_cast<std::size_t>(
        std::count_if(cv_scores.begin(), cv_scores.end(), [](const auto& s) { return !s.has_value(); }));
}

ScoreReport fit_and_score(const Dataset& train, const Dataset& test, const HyperParams& params,
                          std::uint64_t seed, std::size_t workers) {
    Model model = fit(train, params, seed, workers);
    auto pred = predict(model, test.features());
    return score(test.response(), pred);
}

TrialRecord evaluate_config(const Dataset& train, const HyperParams& params, const FoldPlan& folds,
                            const EvalOptions& options) {
    validate(params);
    if (folds.n() != train.n())
        throw ParamError("fold plan covers " + std::to_string(folds.n()) + " rows but the dataset has " +
                         std::to_string(train.n()));
    const auto start = std::chrono::steady_clock::now();

    TrialRecord t;
    t.algorithm = algorithm_of(params);
    t.params = params;
    t.seed = options.seed;
    t.cv_scores.resize(folds.k);

    parallel_for(folds.k, options.workers, [&](std::size_t f) {
        try {
            const Dataset fit_part = train.subset(folds.out_of_fold_rows(f));
            const Dataset held_out = train.subset(folds.fold_rows(f));
            t.cv_scores[f] = fit_and_score(fit_part, held_out, params, derive_seed(options.seed, 0xf17, f));
        } catch (const DataError&) {
            t.cv_scores[f].reset();
        }
    });

    const std::size_t failed = t.failed_folds();
    if (failed > kMaxFailedFolds)
        throw TrialRejected("trial rejected: " + std::to_string(failed) + " of " + std::to_string(folds.k) +
                            " folds failed");
    double nse_sum = 0.0, kge_sum = 0.0;
    for (const auto& s : t.cv_scores) {
        if (!s) continue;
        nse_sum += s->nse;
        kge_sum += s->kge;
    }
    const auto ok = static_cast<double>(folds.k - failed);
    t.cv_mean_nse = nse_sum / ok;
    t.cv_mean_kge = kge_sum / ok;
    t.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return t;
}

std::vector<TrialRecord> run_random_search(const Dataset& train, Algorithm algorithm,
                                           const SearchOptions& options) {
    if (options.iterations < 1) throw ParamError("random search needs at least 1 iteration");
    const FoldPlan folds = kfold_partition(train, options.folds, derive_seed(options.seed, 0xf01d));
    const SearchSpace space = SearchSpace::for_algorithm(algorithm);

    std::vector<std::optional<TrialRecord>> results(options.iterations);
    parallel_for(options.iterations, options.workers, [&](std::size_t i) {
        Rng rng = Rng::stream(options.seed, 0x5ea, i);
        HyperParams params = sample_random(space, rng);
        try {
            TrialRecord t = evaluate_config(train, params, folds, {derive_seed(options.seed, 0x7a1, i), 1});
            t.strategy = Strategy::random;
            t.trial_index = i;
            results[i] = std::move(t);
        } catch (const TrialRejected&) {
        }
    });

    std::vector<TrialRecord> out;
    for (auto& r : results)
        if (r) out.push_back(std::move(*r));
    if (out.empty()) throw TrialRejected("random search: every trial was rejected");
    std::stable_sort(out.begin(), out.end(), [&](const TrialRecord& a, const TrialRecord& b) {
        return a.cv_mean(options.metric) > b.cv_mean(options.metric);
    });
    return out;
}

json trial_to_json(const TrialRecord& t, bool include_wall_time) {
    json j;
    j["algorithm"] = to_string(t.algorithm);
    j["strategy"] = to_string(t.strategy);
    j["trial"] = t.trial_index;
    j["seed"] = t.seed;
    j["params"] = params_to_json(t.params);
    json folds = json::array();
    for (const auto& s : t.cv_scores) folds.push_back(s ? score_to_json(*s) : json(nullptr));
    j["cv_scores"] = folds;
    j["cv_mean_nse"] = t.cv_mean_nse;
    j["cv_mean_kge"] = t.cv_mean_kge;
    j["test_score"] = t.test_score ? score_to_json(*t.test_score) : json(nullptr);
    if (include_wall_time) j["wall_time"] = t.wall_time;
    return j;
}

TrialRecord trial_from_json(const json& j) {
    try {
        TrialRecord t;
        t.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
        t.strategy = parse_strategy(j.at("strategy").get<std::string>());
        t.trial_index = j.at("trial").get<std::size_t>();
        t.seed = j.at("seed").get<std::uint64_t>();
        t.params = params_from_json(j.at("params"));
        for (const auto& s : j.at("cv_scores"))
            t.cv_scores.push_back(s.is_null() ? std::nullopt : std::optional(score_from_json(s)));
        t.cv_mean_nse = j.at("cv_mean_nse").get<double>();
        t.cv_mean_kge = j.at("cv_mean_kge").get<double>();
        if (!j.at("test_score").is_null()) t.test_score = score_from_json(j["test_score"]);
        if (j.contains("wall_time")) t.wall_time = j["wall_time"].get<double>();
        return t;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed trial record: ") + e.what());
    }
}

std::string trials_to_csv(const std::vector<TrialRecord>& trials) {
    std::string out;
    if (trials.empty()) return out;
    const json first = params_to_json(trials.front().params);
    out = "trial,strategy,seed";
    for (const auto& [key, _] : first.items())
        if (key != "algorithm") out += "," + key;
    out += ",cv_mean_nse,cv_mean_kge,failed_folds,test_nse,test_kge\n";
    for (const auto& t : trials) {
        out += std::to_string(t.trial_index) + "," + std::string(to_string(t.strategy)) + "," +
               std::to_string(t.seed);
        const json p = params_to_json(t.params);
        for (const auto& [key, value] : p.items()) {
            if (key == "algorithm") continue;
            if (value.is_string())
                out += "," + value.get<std::string>();
            else if (value.is_boolean())
                out += value.get<bool>() ? ",1" : ",0";
            else if (value.is_number_integer())
                out += "," + std::to_string(value.get<std::int64_t>());
            else
                out += "," + format_double(value.get<double>());
        }
        out += "," + format_double(t.cv_mean_nse) + "," + format_double(t.cv_mean_kge) + "," +
               std::to_string(t.failed_folds());
        out += t.test_score ? "," + format_double(t.test_score->nse) + "," + format_double(t.test_score->kge)
                            : std::string(",,");
        out += "\n";
    }
    return out;
}

}  // namespace treetune
