#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "treetune/dataset.hpp"
#include "treetune/tree.hpp"

namespace treetune {

/// The five random forest hyperparameters.
///
/// `mtry_fraction` is the share of the p features drawn at every node; an
/// empty value means the sqrt(p) rule, resolved once p is known. Node size is
/// stored as an exponent u so that the minimum node size is max(1, round(n^u)).
struct RfHyperParams {
    std::optional<double> mtry_fraction;
    int num_trees = 500;
    bool replace = true;
    double min_node_size_exponent = 0.0;
    double sample_fraction = 1.0;

    /// Throws ParamError when a field is out of range.
    void validate() const;
    double resolved_mtry_fraction(std::size_t p) const;
    std::size_t effective_mtry(std::size_t p) const;
    std::size_t effective_min_node_size(std::size_t n) const;

    bool operator==(const RfHyperParams&) const = default;
};

struct Forest {
    std::vector<RegressionTree> trees;
    RfHyperParams params;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;
    /// Out-of-bag estimates are not computed by this engine.
    bool oob_available = false;

    bool operator==(const Forest&) const = default;
};

/// Bagged CART regression trees with per-node feature subsampling. Rows are
/// put in a canonical (lexicographic) order before bagging, so the fitted
/// forest does not depend on input row order. Tree i draws from its own
/// random stream derived from (seed, i); `workers` only affects speed.
Forest fit_forest(const Dataset& train, const RfHyperParams& params, std::uint64_t seed,
                  std::size_t workers = 1);

/// Mean of the tree predictions, row by row.
std::vector<double> predict(const Forest& model, const Matrix& features);

}  // namespace treetune
