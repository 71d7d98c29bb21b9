#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treetune/matrix.hpp"

namespace treetune {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// Tabular regression problem: one response column and p numeric features.
/// Missing cells are stored as NaN until `clean` removes or imputes them.
/// Immutable once built; share freely across threads.
class Dataset {
public:
    Dataset(std::string name,
            std::string response_name,
            std::vector<std::string> feature_names,
            std::vector<double> response,
            Matrix features,
            std::size_t imputed_cells = 0);

    const std::string& name() const { return name_; }
    const std::string& response_name() const { return response_name_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    std::span<const double> response() const { return response_; }
    const Matrix& features() const { return features_; }
    std::size_t n() const { return response_.size(); }
    std::size_t p() const { return features_.cols(); }

    /// Feature cells filled in by imputation over the dataset's history.
    std::size_t imputed_cells() const { return imputed_cells_; }

    bool has_missing_response() const;
    bool has_missing_features() const;
    bool is_dense() const { return !has_missing_response() && !has_missing_features(); }

    /// Fraction of missing cells in feature column `col` (0 for a dense column).
    double missing_fraction(std::size_t col) const;

    /// Rows in the given order; row order is otherwise preserved.
    Dataset subset(std::span<const std::size_t> rows) const;
    Dataset renamed(std::string name) const;

    bool operator==(const Dataset&) const = default;

private:
    std::string name_;
    std::string response_name_;
    std::vector<std::string> feature_names_;
    std::vector<double> response_;
    Matrix features_;
    std::size_t imputed_cells_ = 0;
};

/// True for the cell spellings treated as missing: empty, "NA", "NaN"
/// (case-insensitive, surrounding whitespace ignored).
bool is_missing_marker(std::string_view cell);

/// Reads a header + numeric CSV. `response_col` selects the response column
/// (0 = first column); the remaining columns become features in file order.
Dataset load_csv(const std::filesystem::path& path, std::size_t response_col = 0);
Dataset parse_csv(std::string_view text, std::string name, std::size_t response_col = 0);

/// Response first, then features, header row, shortest round-trip numbers.
std::string to_csv(const Dataset& d);

struct CleanReport {
    std::string dataset;
    double column_threshold = 0.0;
    std::size_t rows_in = 0;
    std::size_t cols_in = 0;
    std::size_t rows_dropped = 0;
    std::vector<std::string> columns_dropped;
    /// Imputed cell count per retained column, in output column order.
    std::vector<std::pair<std::string, std::size_t>> imputed;
};

struct CleanResult {
    Dataset data;
    CleanReport report;
};

/// Drops rows with a missing response, then feature columns whose missing
/// fraction exceeds `column_threshold`, then fills the remaining gaps with
/// the column median. Columns with no observed values are always dropped.
CleanResult clean_with_report(const Dataset& raw, double column_threshold);
Dataset clean(const Dataset& raw, double column_threshold);

/// One variant (threshold 0.1) when every feature column is at most 10%
/// missing after response filtering; otherwise two variants built with
/// thresholds 0.5 and 0.1, named "<name>_miss50" and "<name>_miss10".
std::vector<CleanResult> make_variants(const Dataset& raw);

std::string clean_report_json(const CleanReport& report);

struct SplitSpec {
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Test size is round_half_up(n * test_fraction). Both index lists ascending.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);
std::pair<Dataset, Dataset> train_test_split(const Dataset& d, const SplitSpec& spec);

/// Assignment of each training row to one of k folds; fold sizes differ by
/// at most one.
struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;
    std::uint64_t seed = 0;

    std::size_t n() const { return assignments.size(); }
    std::vector<std::size_t> fold_rows(std::size_t fold) const;
    std::vector<std::size_t> out_of_fold_rows(std::size_t fold) const;
    std::vector<std::size_t> fold_sizes() const;
};

FoldPlan kfold_partition(std::size_t n, std::size_t k, std::uint64_t seed);
inline FoldPlan kfold_partition(const Dataset& d, std::size_t k, std::uint64_t seed) {
    return kfold_partition(d.n(), k, seed);
}

/// Stable content hash of a dataset (names and values).
std::uint64_t fingerprint(const Dataset& d);

}  // namespace treetune
