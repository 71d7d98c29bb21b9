#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "treetune/hpo.hpp"

namespace treetune {

/// Dataset summary used as meta-model input.
///
/// Moments use the population estimators (skewness m3/m2^1.5, excess
/// kurtosis m4/m2^2 - 3); a constant response yields zero for both and for
/// its correlations. The coefficient of variation is sd / |mean| with the
/// sample sd, or 0 when the mean is 0.
struct MetaFeatures {
    double n_obs = 0;
    double n_features = 0;
    double dimensionality = 0;  // p / n
    double response_mean = 0;
    double response_sd = 0;
    double response_cv = 0;
    double response_skewness = 0;
    double response_kurtosis = 0;
    double mean_abs_feature_response_corr = 0;
    double max_abs_feature_response_corr = 0;
    double mean_abs_feature_feature_corr = 0;
    double imputed_fraction = 0;

    static constexpr std::size_t kCount = 12;
    std::array<double, kCount> values() const;
    static const std::array<const char*, kCount>& names();
    static MetaFeatures from_values(std::span<const double> v);
};

MetaFeatures extract_meta_features(const Dataset& train);

/// Names of the hyperparameter columns fed to a meta-model, on the sampling
/// scale (log2 for eta, min_child_weight, alpha, lambda; u for n^u).
std::vector<std::string> hyperparameter_columns(Algorithm algorithm);

/// Hyperparameters flattened onto their sampling scale. `p` resolves the
/// sqrt(p) mtry rule. L1/L2 strengths below 2^-10 (including 0) map to -10.
std::vector<double> flatten_params(const HyperParams& params, std::size_t p);

struct MetaRecord {
    std::string dataset;
    Algorithm algorithm = Algorithm::rf;
    Strategy strategy = Strategy::random;
    std::size_t trial = 0;
    HyperParams params;
    std::vector<double> flat_params;
    MetaFeatures meta;
    double kge = 0.0;
    double nse = 0.0;
    double std_kge = 0.0;
    double std_nse = 0.0;

    double standardized(Metric m) const { return m == Metric::nse ? std_nse : std_kge; }
};

struct MetaDatabase {
    std::vector<MetaRecord> records;
    std::vector<std::string> warnings;
};

struct MetaBuildOptions {
    std::size_t iterations = 100;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::vector<Algorithm> algorithms{Algorithm::rf, Algorithm::gbt};
};

/// For every dataset and algorithm: default, optimal default and
/// `iterations` random configurations are fit on the training split and
/// scored on the test split; scores are standardized within the
/// (dataset, algorithm) group. Trials that fail are left out; a group with
/// no surviving trial is skipped with a warning.
MetaDatabase build_meta_database(const std::vector<Dataset>& datasets, const MetaBuildOptions& options);

/// Re-standardizes the raw scores inside each (dataset, algorithm) group.
void standardize_groups(std::vector<MetaRecord>& records);

json meta_record_to_json(const MetaRecord& r);
MetaRecord meta_record_from_json(const json& j);
std::string meta_database_to_ndjson(const std::vector<MetaRecord>& records);
std::vector<MetaRecord> meta_database_from_ndjson(std::string_view text);
/// Flattened, one column per hyperparameter and meta-feature.
std::string meta_database_to_csv(const std::vector<MetaRecord>& records);

struct MetaModel {
    Metric target = Metric::kge;
    Algorithm algorithm = Algorithm::rf;
    bool uses_metadata = false;
    std::vector<std::string> schema;
    Forest forest;
    std::vector<std::string> datasets;
    std::size_t trial_count = 0;
    std::uint64_t seed = 0;
    /// Median feature count of the training datasets; resolves sqrt(p) for
    /// candidates scored without a dataset.
    std::size_t reference_p = 1;
};

/// Regresses the standardized target on hyperparameter columns (plus
/// meta-features when `uses_metadata`) with the optimal-default forest.
MetaModel train_meta_model(const std::vector<MetaRecord>& db, Metric target, Algorithm algorithm,
                           bool uses_metadata, std::uint64_t seed, std::size_t workers = 1);

/// Lower level: fit a meta-model on an explicit design matrix.
MetaModel train_meta_model_on(Matrix inputs, std::vector<double> targets, Metric target,
                              Algorithm algorithm, bool uses_metadata, std::uint64_t seed,
                              std::size_t workers = 1);

/// Predicted standardized score of each candidate. `meta` is required iff
/// the model uses metadata; `p` resolves the sqrt(p) rule.
std::vector<double> score_candidates(const MetaModel& model, const std::vector<HyperParams>& candidates,
                                     const MetaFeatures* meta, std::size_t p);

/// default + optimal default + n random samples of the algorithm's space.
std::vector<HyperParams> candidate_pool(Algorithm algorithm, std::size_t n_random, std::uint64_t seed);

struct Recommendation {
    HyperParams params;
    double predicted = 0.0;
    std::size_t index = 0;
};

/// Highest predicted candidate; ties go to the earlier candidate.
Recommendation recommend(const MetaModel& model, const Dataset& d_new, const std::vector<HyperParams>& candidates);
Recommendation recommend(const MetaModel& model, const Dataset& d_new, std::size_t pool_size, std::uint64_t seed);

/// Best candidate for a generic dataset according to a metadata-free model.
Recommendation compute_new_optimal_defaults(const MetaModel& model, std::size_t pool_size, std::uint64_t seed);

json meta_model_to_json(const MetaModel& m);
MetaModel meta_model_from_json(const json& j);

}  // namespace treetune
