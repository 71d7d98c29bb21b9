#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treetune/dataset.hpp"
#include "treetune/error.hpp"
#include "treetune/model.hpp"

namespace treetune {

enum class Strategy { default_params, opt_default, random, meta };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

/// Package defaults. The RF mtry is left as the sqrt(p) rule.
HyperParams default_params(Algorithm algorithm);

/// Published optimal defaults for both engines.
HyperParams optimal_default_params(Algorithm algorithm);

enum class Scale { linear, integer, log2, boolean, exponent_of_n, open_unit };

/// One dimension of a search space. For log2 the bounds are exponents; for
/// exponent_of_n they bound u in n^u; open_unit draws from (lo, hi].
struct SearchDimension {
    std::string name;
    Scale scale = Scale::linear;
    double lo = 0.0;
    double hi = 1.0;
};

struct SearchSpace {
    Algorithm algorithm = Algorithm::rf;
    std::vector<SearchDimension> dimensions;

    static SearchSpace for_algorithm(Algorithm algorithm);
    /// True when every field of `params` lies inside this space. `n_rows`
    /// is used to check the effective RF minimum node size lies in [1, n].
    bool contains(const HyperParams& params, std::size_t n_rows) const;
};

/// Uniform draw on each dimension's scale (uniform in the exponent for log2
/// and n^u dimensions).
HyperParams sample_random(const SearchSpace& space, Rng& rng);
HyperParams sample_random(const SearchSpace& space, std::uint64_t seed);

struct TrialRecord {
    Algorithm algorithm = Algorithm::rf;
    Strategy strategy = Strategy::default_params;
    HyperParams params;
    std::size_t trial_index = 0;
    std::uint64_t seed = 0;
    /// One entry per fold; empty when the fold's fit or score failed.
    std::vector<std::optional<ScoreReport>> cv_scores;
    double cv_mean_nse = 0.0;
    double cv_mean_kge = 0.0;
    std::optional<ScoreReport> test_score;
    double wall_time = 0.0;

    double cv_mean(Metric m) const { return m == Metric::nse ? cv_mean_nse : cv_mean_kge; }
    std::size_t failed_folds() const;
};

/// Thrown when more than kMaxFailedFolds folds of a trial fail.
class TrialRejected : public DataError {
public:
    using DataError::DataError;
};

inline constexpr std::size_t kMaxFailedFolds = 2;

struct EvalOptions {
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

/// Fits on each fold's complement, scores the fold, and averages the fold
/// scores that succeeded. A fold whose fit or score throws a DataError is
/// recorded as failed.
TrialRecord evaluate_config(const Dataset& train, const HyperParams& params, const FoldPlan& folds,
                            const EvalOptions& options = {});

struct SearchOptions {
    std::size_t iterations = 100;
    Metric metric = Metric::kge;
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

/// Random search on one shared fold plan. Trial i samples its parameters and
/// fit seeds from streams derived from (seed, i). Rejected trials are
/// dropped; the rest come back sorted by CV mean of `metric`, best first,
/// ties in trial order. Throws TrialRejected if every trial is rejected.
std::vector<TrialRecord> run_random_search(const Dataset& train, Algorithm algorithm,
                                           const SearchOptions& options);

/// Fits `params` on `train` and scores on `test` (both metrics).
ScoreReport fit_and_score(const Dataset& train, const Dataset& test, const HyperParams& params,
                          std::uint64_t seed, std::size_t workers = 1);

json trial_to_json(const TrialRecord& t, bool include_wall_time = false);
TrialRecord trial_from_json(const json& j);

/// One flattened CSV row per trial; header is fixed per algorithm.
std::string trials_to_csv(const std::vector<TrialRecord>& trials);

}  // namespace treetune
