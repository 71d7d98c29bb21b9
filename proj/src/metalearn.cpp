#include "treetune/metalearn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "treetune/error.hpp"
#include "treetune/parallel.hpp"
#include "treetune/rng.hpp"
#include "treetune/util.hpp"

namespace treetune {

namespace {

constexpr double kLog2Floor = -10.0;

double log2_floored(double v) { return v <= std::exp2(kLog2Floor) ? kLog2Floor : std::log2(v); }

}  // namespace

std::array<double, MetaFeatures::kCount> MetaFeatures::values() const {
    return {n_obs,
            n_features,
            dimensionality,
            response_mean,
            response_sd,
            response_cv,
            response_skewness,
            response_kurtosis,
            mean_abs_feature_response_corr,
            max_abs_feature_response_corr,
            mean_abs_feature_feature_corr,
            imputed_fraction};
}

const std::array<const char*, MetaFeatures::kCount>& MetaFeatures::names() {
    static const std::array<const char*, kCount> n{
        "n_obs",          "n_features",        "dimensionality",    "response_mean",
        "response_sd",    "response_cv",       "response_skewness", "response_kurtosis",
        "mean_abs_xy_corr", "max_abs_xy_corr", "mean_abs_xx_corr",  "imputed_fraction"};
    return n;
}

MetaFeatures MetaFeatures::from_values(std::span<const double> v) {
    if (v.size() != kCount) throw DataError("meta-feature vector has the wrong length");
    MetaFeatures m;
    m.n_obs = v[0];
    m.n_features = v[1];
    m.dimensionality = v[2];
    m.response_mean = v[3];
    m.response_sd = v[4];
    m.response_cv = v[5];
    m.response_skewness = v[6];
    m.response_kurtosis = v[7];
    m.mean_abs_feature_response_corr = v[8];
    m.max_abs_feature_response_corr = v[9];
    m.mean_abs_feature_feature_corr = v[10];
    m.imputed_fraction = v[11];
    return m;
}

MetaFeatures extract_meta_features(const Dataset& train) {
    if (train.n() < 3) throw DataError("meta-features need at least 3 rows");
    if (!train.is_dense()) throw DataError("meta-features need a cleaned dataset");
    const std::size_t n = train.n();
    const std::size_t p = train.p();
    const auto y = train.response();

    MetaFeatures m;
    m.n_obs = static_cast<double>(n);
    m.n_features = static_cast<double>(p);
    m.dimensionality = m.n_features / m.n_obs;
    m.response_mean = mean(y);
    m.response_sd = sample_sd(y);
    m.response_cv = m.response_mean != 0.0 ? m.response_sd / std::abs(m.response_mean) : 0.0;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : y) {
        const double d = v - m.response_mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= m.n_obs;
    m3 /= m.n_obs;
    m4 /= m.n_obs;
    if (m2 > 0.0) {
        m.response_skewness = m3 / std::pow(m2, 1.5);
        m.response_kurtosis = m4 / (m2 * m2) - 3.0;
    }

    std::vector<std::vector<double>> cols(p);
    for (std::size_t j = 0; j < p; ++j) cols[j] = train.features().column(j);
    double sum_xy = 0.0, max_xy = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        const double c = std::min(1.0, std::abs(pearson(cols[j], y)));
        sum_xy += c;
        max_xy = std::max(max_xy, c);
    }
    m.mean_abs_feature_response_corr = sum_xy / static_cast<double>(p);
    m.max_abs_feature_response_corr = max_xy;

    double sum_xx = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a + 1; b < p; ++b) {
            sum_xx += std::min(1.0, std::abs(pearson(cols[a], cols[b])));
            ++pairs;
        }
    m.mean_abs_feature_feature_corr = pairs ? sum_xx / static_cast<double>(pairs) : 0.0;
    m.imputed_fraction =
        std::min(1.0, static_cast<double>(train.imputed_cells()) / (static_cast<double>(n) * static_cast<double>(p)));
    return m;
}

std::vector<std::string> hyperparameter_columns(Algorithm algorithm) {
    if (algorithm == Algorithm::rf)
        return {"mtry", "num_trees", "replace", "min_node_size", "sample_fraction"};
    return {"nrounds",          "log2_eta",         "subsample",  "max_depth",
            "log2_min_child_weight", "colsample_bytree", "log2_alpha", "log2_lambda"};
}

std::vector<double> flatten_params(const HyperParams& params, std::size_t p) {
    if (const auto* rf = std::get_if<RfHyperParams>(&params))
        return {rf->resolved_mtry_fraction(std::max<std::size_t>(p, 1)), static_cast<double>(rf->num_trees),
                rf->replace ? 1.0 : 0.0, rf->min_node_size_exponent, rf->sample_fraction};
    const auto& g = std::get<GbtHyperParams>(params);
    return {static_cast<double>(g.nrounds), log2_floored(g.eta),        g.subsample,
            static_cast<double>(g.max_depth), log2_floored(g.min_child_weight), g.colsample_bytree,
            log2_floored(g.alpha),           log2_floored(g.lambda)};
}

void standardize_groups(std::vector<MetaRecord>& records) {
    std::map<std::pair<std::string, Algorithm>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i)
        groups[{records[i].dataset, records[i].algorithm}].push_back(i);
    for (const auto& [key, idx] : groups) {
        std::vector<double> kge(idx.size()), nse(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            kge[k] = records[idx[k]].kge;
            nse[k] = records[idx[k]].nse;
        }
        std::vector<double> zk(idx.size(), 0.0), zn(idx.size(), 0.0);
        if (idx.size() >= 2) {
            zk = standardize_scores(kge);
            zn = standardize_scores(nse);
        }
        for (std::size_t k = 0; k < idx.size(); ++k) {
            records[idx[k]].std_kge = zk[k];
            records[idx[k]].std_nse = zn[k];
        }
    }
}

MetaDatabase build_meta_database(const std::vector<Dataset>& datasets, const MetaBuildOptions& options) {
    if (datasets.size() < 2) throw ParamError("a meta-database needs at least 2 datasets");
    std::set<std::string> names;
    for (const auto& d : datasets)
        if (!names.insert(d.name()).second) throw ParamError("duplicate dataset name '" + d.name() + "'");

    MetaDatabase db;
    for (std::size_t di = 0; di < datasets.size(); ++di) {
        const Dataset& d = datasets[di];
        std::optional<std::pair<Dataset, Dataset>> split;
        MetaFeatures meta;
        try {
            split = train_test_split(d, {options.test_fraction, derive_seed(options.seed, 0xd5, di)});
            meta = extract_meta_features(split->first);
        } catch (const DataError& e) {
            db.warnings.push_back("dataset '" + d.name() + "' skipped: " + e.what());
            continue;
        }
        const Dataset& train = split->first;
        const Dataset& test = split->second;

        for (Algorithm alg : options.algorithms) {
            const auto alg_tag = static_cast<std::uint64_t>(alg);
            std::vector<std::pair<Strategy, HyperParams>> configs;
            configs.emplace_back(Strategy::default_params, default_params(alg));
            configs.emplace_back(Strategy::opt_default, optimal_default_params(alg));
            const SearchSpace space = SearchSpace::for_algorithm(alg);
            for (std::size_t i = 0; i < options.iterations; ++i) {
                Rng rng = Rng::stream(derive_seed(options.seed, di, alg_tag), 0x3e7a, i);
                configs.emplace_back(Strategy::random, sample_random(space, rng));
            }

            std::vector<std::optional<MetaRecord>> out(configs.size());
            parallel_for(configs.size(), options.workers, [&](std::size_t i) {
                const auto& [strategy, params] = configs[i];
                try {
                    ScoreReport s = fit_and_score(train, test, params,
                                                  derive_seed(derive_seed(options.seed, di, alg_tag), 0xf1, i));
                    MetaRecord r;
                    r.dataset = d.name();
                    r.algorithm = alg;
                    r.strategy = strategy;
                    r.trial = i;
                    r.params = params;
                    r.flat_params = flatten_params(params, train.p());
                    r.meta = meta;
                    r.kge = s.kge;
                    r.nse = s.nse;
                    out[i] = std::move(r);
                } catch (const DataError&) {
                }
            });
            std::size_t kept = 0;
            for (auto& r : out)
                if (r) {
                    db.records.push_back(std::move(*r));
                    ++kept;
                }
            if (kept == 0)
                db.warnings.push_back("dataset '" + d.name() + "' skipped for " + std::string(to_string(alg)) +
                                      ": every trial failed");
            else if (kept < configs.size())
                db.warnings.push_back("dataset '" + d.name() + "', " + std::string(to_string(alg)) + ": " +
                                      std::to_string(configs.size() - kept) + " trials failed");
        }
    }
    standardize_groups(db.records);
    return db;
}

json meta_record_to_json(const MetaRecord& r) {
    json j;
    j["dataset"] = r.dataset;
    j["algorithm"] = to_string(r.algorithm);
    j["strategy"] = to_string(r.strategy);
    j["trial"] = r.trial;
    j["params"] = params_to_json(r.params);
    json flat;
    const auto cols = hyperparameter_columns(r.algorithm);
    for (std::size_t i = 0; i < cols.size(); ++i) flat[cols[i]] = r.flat_params.at(i);
    j["flat"] = flat;
    json meta;
    const auto values = r.meta.values();
    for (std::size_t i = 0; i < values.size(); ++i) meta[MetaFeatures::names()[i]] = values[i];
    j["meta"] = meta;
    j["kge"] = r.kge;
    j["nse"] = r.nse;
    j["std_kge"] = r.std_kge;
    j["std_nse"] = r.std_nse;
    return j;
}

MetaRecord meta_record_from_json(const json& j) {
    try {
        MetaRecord r;
        r.dataset = j.at("dataset").get<std::string>();
        r.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
        r.strategy = parse_strategy(j.at("strategy").get<std::string>());
        r.trial = j.at("trial").get<std::size_t>();
        r.params = params_from_json(j.at("params"));
        for (const auto& c : hyperparameter_columns(r.algorithm)) r.flat_params.push_back(j.at("flat").at(c).get<double>());
        std::vector<double> meta;
        for (const char* name : MetaFeatures::names()) meta.push_back(j.at("meta").at(name).get<double>());
        r.meta = MetaFeatures::from_values(meta);
        r.kge = j.at("kge").get<double>();
        r.nse = j.at("nse").get<double>();
        r.std_kge = j.at("std_kge").get<double>();
        r.std_nse = j.at("std_nse").get<double>();
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed meta-database record: ") + e.what());
    }
}

std::string meta_database_to_ndjson(const std::vector<MetaRecord>& records) {
    std::string out;
    for (const auto& r : records) out += meta_record_to_json(r).dump() + "\n";
    return out;
}

std::vector<MetaRecord> meta_database_from_ndjson(std::string_view text) {
    std::vector<MetaRecord> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(std::string("meta-database line is not JSON: ") + e.what());
        }
        out.push_back(meta_record_from_json(j));
    }
    return out;
}

std::string meta_database_to_csv(const std::vector<MetaRecord>& records) {
    const auto rf_cols = hyperparameter_columns(Algorithm::rf);
    const auto gbt_cols = hyperparameter_columns(Algorithm::gbt);
    std::string out = "dataset,algorithm,strategy,trial";
    for (const auto& c : rf_cols) out += ",rf_" + c;
    for (const auto& c : gbt_cols) out += ",gbt_" + c;
    for (const char* name : MetaFeatures::names()) out += std::string(",") + name;
    out += ",kge,nse,std_kge,std_nse\n";
    for (const auto& r : records) {
        out += r.dataset + "," + std::string(to_string(r.algorithm)) + "," + std::string(to_string(r.strategy)) +
               "," + std::to_string(r.trial);
        for (std::size_t i = 0; i < rf_cols.size(); ++i)
            out += "," + (r.algorithm == Algorithm::rf ? format_double(r.flat_params[i]) : std::string());
        for (std::size_t i = 0; i < gbt_cols.size(); ++i)
            out += "," + (r.algorithm == Algorithm::gbt ? format_double(r.flat_params[i]) : std::string());
        for (double v : r.meta.values()) out += "," + format_double(v);
        out += "," + format_double(r.kge) + "," + format_double(r.nse) + "," + format_double(r.std_kge) + "," +
               format_double(r.std_nse) + "\n";
    }
    return out;
}

namespace {

RfHyperParams meta_forest_params() { return std::get<RfHyperParams>(optimal_default_params(Algorithm::rf)); }

std::vector<std::string> schema_for(Algorithm algorithm, bool uses_metadata) {
    auto schema = hyperparameter_columns(algorithm);
    if (uses_metadata)
        for (const char* name : MetaFeatures::names()) schema.emplace_back(name);
    return schema;
}

}  // namespace

MetaModel train_meta_model_on(Matrix inputs, std::vector<double> targets, Metric target, Algorithm algorithm,
                              bool uses_metadata, std::uint64_t seed, std::size_t workers) {
    auto schema = schema_for(algorithm, uses_metadata);
    if (inputs.cols() != schema.size())
        throw ParamError("meta-model inputs have " + std::to_string(inputs.cols()) + " columns, schema needs " +
                         std::to_string(schema.size()));
    if (inputs.rows() < 2) throw DataError("meta-model needs at least 2 training records");
    std::vector<std::string> names = schema;
    Dataset table("meta", "target", std::move(names), std::move(targets), std::move(inputs));
    MetaModel m;
    m.target = target;
    m.algorithm = algorithm;
    m.uses_metadata = uses_metadata;
    m.schema = std::move(schema);
    m.seed = seed;
    m.trial_count = table.n();
    m.forest = fit_forest(table, meta_forest_params(), seed, workers);
    return m;
}

MetaModel train_meta_model(const std::vector<MetaRecord>& db, Metric target, Algorithm algorithm,
                           bool uses_metadata, std::uint64_t seed, std::size_t workers) {
    std::vector<const MetaRecord*> rows;
    for (const auto& r : db)
        if (r.algorithm == algorithm) rows.push_back(&r);
    if (rows.empty())
        throw DataError("meta-database has no " + std::string(to_string(algorithm)) + " records");

    const std::size_t hp = hyperparameter_columns(algorithm).size();
    const std::size_t cols = hp + (uses_metadata ? MetaFeatures::kCount : 0);
    Matrix x(rows.size(), cols);
    std::vector<double> y(rows.size());
    std::map<std::string, double> dataset_p;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const MetaRecord& r = *rows[i];
        for (std::size_t j = 0; j < hp; ++j) x(i, j) = r.flat_params.at(j);
        if (uses_metadata) {
            const auto v = r.meta.values();
            for (std::size_t j = 0; j < v.size(); ++j) x(i, hp + j) = v[j];
        }
        y[i] = r.standardized(target);
        dataset_p[r.dataset] = r.meta.n_features;
    }
    MetaModel m = train_meta_model_on(std::move(x), std::move(y), target, algorithm, uses_metadata, seed, workers);
    std::vector<double> ps;
    for (const auto& [name, p] : dataset_p) {
        m.datasets.push_back(name);
        ps.push_back(p);
    }
    std::sort(ps.begin(), ps.end());
    m.reference_p = static_cast<std::size_t>(std::max(1.0, ps[(ps.size() - 1) / 2]));
    return m;
}

std::vector<double> score_candidates(const MetaModel& model, const std::vector<HyperParams>& candidates,
                                     const MetaFeatures* meta, std::size_t p) {
    if (model.uses_metadata && meta == nullptr)
        throw ParamError("this meta-model needs dataset meta-features");
    const std::size_t hp = hyperparameter_columns(model.algorithm).size();
    if (model.schema.size() != hp + (model.uses_metadata ? MetaFeatures::kCount : 0))
        throw DataError("meta-model schema does not match its algorithm");
    Matrix x(candidates.size(), model.schema.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (algorithm_of(candidates[i]) != model.algorithm)
            throw ParamError("candidate " + std::to_string(i) + " is a " +
                             std::string(to_string(algorithm_of(candidates[i]))) + " configuration but the model scores " +
                             std::string(to_string(model.algorithm)));
        const auto flat = flatten_params(candidates[i], p);
        for (std::size_t j = 0; j < hp; ++j) x(i, j) = flat[j];
        if (model.uses_metadata) {
            const auto v = meta->values();
            for (std::size_t j = 0; j < v.size(); ++j) x(i, hp + j) = v[j];
        }
    }
    return predict(model.forest, x);
}

std::vector<HyperParams> candidate_pool(Algorithm algorithm, std::size_t n_random, std::uint64_t seed) {
    std::vector<HyperParams> pool{default_params(algorithm), optimal_default_params(algorithm)};
    const SearchSpace space = SearchSpace::for_algorithm(algorithm);
    Rng rng = Rng::stream(seed, 0xca4d);
    for (std::size_t i = 0; i < n_random; ++i) pool.push_back(sample_random(space, rng));
    return pool;
}

namespace {

Recommendation argmax(const std::vector<HyperParams>& candidates, const std::vector<double>& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return Recommendation{candidates[best], scores[best], best};
}

}  // namespace

Recommendation recommend(const MetaModel& model, const Dataset& d_new, const std::vector<HyperParams>& candidates) {
    if (candidates.empty()) throw ParamError("recommendation needs at least one candidate");
    std::optional<MetaFeatures> meta;
    if (model.uses_metadata) meta = extract_meta_features(d_new);
    auto scores = score_candidates(model, candidates, meta ? &*meta : nullptr, d_new.p());
    return argmax(candidates, scores);
}

Recommendation recommend(const MetaModel& model, const Dataset& d_new, std::size_t pool_size, std::uint64_t seed) {
    if (pool_size < 1) throw ParamError("candidate pool size must be at least 1");
    return recommend(model, d_new, candidate_pool(model.algorithm, pool_size, seed));
}

Recommendation compute_new_optimal_defaults(const MetaModel& model, std::size_t pool_size, std::uint64_t seed) {
    if (model.uses_metadata)
        throw ParamError("new optimal defaults need a meta-model trained without metadata");
    auto pool = candidate_pool(model.algorithm, pool_size, seed);
    auto scores = score_candidates(model, pool, nullptr, model.reference_p);
    return argmax(pool, scores);
}

json meta_model_to_json(const MetaModel& m) {
    json j;
    j["format"] = "treetune-meta-model";
    j["version"] = kModelFormatVersion;
    j["target"] = to_string(m.target);
    j["algorithm"] = to_string(m.algorithm);
    j["uses_metadata"] = m.uses_metadata;
    j["schema"] = m.schema;
    j["manifest"] = json{{"datasets", m.datasets},
                         {"trial_count", m.trial_count},
                         {"seed", m.seed},
                         {"reference_p", m.reference_p}};
    j["model"] = model_to_json(m.forest);
    return j;
}

MetaModel meta_model_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != "treetune-meta-model")
            throw DataError("not a treetune meta-model file");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw DataError("unsupported meta-model version");
        MetaModel m;
        m.target = parse_metric(j.at("target").get<std::string>());
        m.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
        m.uses_metadata = j.at("uses_metadata").get<bool>();
        m.schema = j.at("schema").get<std::vector<std::string>>();
        const auto& man = j.at("manifest");
        m.datasets = man.at("datasets").get<std::vector<std::string>>();
        m.trial_count = man.at("trial_count").get<std::size_t>();
        m.seed = man.at("seed").get<std::uint64_t>();
        m.reference_p = man.at("reference_p").get<std::size_t>();
        Model inner = model_from_json(j.at("model"));
        if (!std::holds_alternative<Forest>(inner)) throw DataError("meta-model must embed a random forest");
        m.forest = std::get<Forest>(std::move(inner));
        if (m.schema != schema_for(m.algorithm, m.uses_metadata) || m.forest.n_features != m.schema.size())
            throw DataError("meta-model schema does not match its algorithm and metadata flag");
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed meta-model file: ") + e.what());
    }
}

}  // namespace treetune
