#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "treetune/metalearn.hpp"

namespace treetune {

// ---------------------------------------------------------------------------
// Timing sweeps
// ---------------------------------------------------------------------------

struct TimingRecord {
    std::string engine;
    std::string sweep;  // "trees" or "samples"
    std::size_t value = 0;
    std::vector<double> seconds;
    double mean_seconds = 0.0;
};

/// Fits one model of `trees` trees (or rounds) on `data`. Registered per
/// engine name so external engines can be timed the same way.
using TimedFit = std::function<void(const Dataset& data, std::size_t trees, std::uint64_t seed)>;

/// The two in-repo engines with their package-default settings.
std::map<std::string, TimedFit> builtin_engines(std::size_t workers = 1);

struct SweepRange {
    std::size_t start = 50;
    std::size_t stop = 5000;
    std::size_t step = 100;

    /// start, start + step, ... while <= stop.
    std::vector<std::size_t> points() const;
};

struct TimingResult {
    std::vector<TimingRecord> records;
    /// Engines whose sweep stopped early because a fit threw.
    std::vector<std::string> aborted;
};

TimingResult time_vs_trees(const Dataset& d, const SweepRange& range, std::size_t reps,
                           const std::map<std::string, TimedFit>& engines, std::uint64_t seed);

/// Sample sizes come from `range` capped at n. Each sweep point fits on one
/// seeded row subsample, reused across its repetitions.
TimingResult time_vs_samples(const Dataset& d, const SweepRange& range, std::size_t trees, std::size_t reps,
                             const std::map<std::string, TimedFit>& engines, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Six-method comparison
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMethodCount = 6;
const std::array<std::string, kMethodCount>& method_names();

struct RankRow {
    std::string dataset;
    std::array<double, kMethodCount> scores{};
    std::array<double, kMethodCount> ranks{};
};

struct RankTable {
    Metric metric = Metric::kge;
    std::vector<RankRow> rows;
    std::vector<std::string> skipped;
};

/// Descending ranks, 1 = best; tied scores share the mean of their positions.
std::vector<double> rank_descending(std::span<const double> scores);

/// Meta-model for evaluating `dataset` with `algorithm`; must not have been
/// trained on that dataset.
using MetaModelProvider = std::function<MetaModel(const std::string& dataset, Algorithm algorithm)>;

/// Provider that trains leave-one-dataset-out meta-models from `db`.
MetaModelProvider leave_one_out_provider(std::vector<MetaRecord> db, Metric target, bool uses_metadata,
                                         std::uint64_t seed, std::size_t workers = 1);

struct CompareOptions {
    Metric metric = Metric::kge;
    double test_fraction = 0.2;
    std::size_t pool_size = 1000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

RankTable compare_methods(const std::vector<Dataset>& datasets, const MetaModelProvider& meta_models,
                          const CompareOptions& options);

struct ReportManifest {
    std::string command;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> settings;
    std::vector<std::pair<std::string, std::uint64_t>> dataset_hashes;
};

/// Writes ranks.csv, ranks_heatmap.csv, rank_tally.csv, deltas.csv,
/// timings.csv and manifest.json into out_dir. Returns the written paths.
std::vector<std::filesystem::path> export_reports(const RankTable& ranks, const std::vector<TimingRecord>& timings,
                                                  const std::filesystem::path& out_dir,
                                                  const ReportManifest& manifest);

std::string timings_to_csv(const std::vector<TimingRecord>& timings);
std::vector<TimingRecord> timings_from_csv(std::string_view text);
std::string ranks_to_csv(const RankTable& ranks);
RankTable ranks_from_csv(std::string_view text, Metric metric);
std::string rank_heatmap_csv(const RankTable& ranks);
std::string rank_tally_csv(const RankTable& ranks);
std::string deltas_csv(const RankTable& ranks);

extern const char* const kVersion;

}  // namespace treetune
