#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "treetune/matrix.hpp"

namespace treetune {

class Rng;

/// A node of a binary regression tree. Leaves have feature == -1.
/// Rows with x[feature] <= threshold go left.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

/// Flat array of nodes; node 0 is the root.
struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row) const;
    /// Index of the leaf that `row` lands in.
    std::size_t leaf_index(std::span<const double> row) const;
    std::size_t leaf_count() const;
    std::size_t depth() const;

    bool operator==(const RegressionTree&) const = default;
};

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    /// Decrease in the sum of squared deviations from the node mean.
    double reduction = 0.0;
};

/// Exhaustive CART search over the given features: the (feature, midpoint)
/// pair with the largest reduction in squared error such that both children
/// hold at least `min_node` of `rows` (which may repeat indices). Ties go to
/// the lowest feature index, then the lowest threshold. Returns nothing when
/// no legal split improves the node.
std::optional<Split> best_split(const Matrix& x,
                                std::span<const double> y,
                                std::span<const std::size_t> rows,
                                std::span<const std::size_t> features,
                                std::size_t min_node);

/// Midpoint between two consecutive distinct sorted values, nudged so that
/// lo <= threshold < hi holds after rounding.
double split_threshold(double lo, double hi);

/// Minimum relative gain for a split to count as an improvement, and the
/// margin by which a later candidate must beat the current best. Candidates
/// within this margin are ties, so the earlier one (lower feature, then lower
/// threshold) is kept even when rounding differs between columns.
inline constexpr double kGainTolerance = 1e-12;

/// Column-major copy of the training features plus each column's row order
/// sorted by value (ties by row index). Built once per fit, shared by trees.
class SortedColumns {
public:
    explicit SortedColumns(const Matrix& x);

    std::size_t n() const { return n_; }
    std::size_t p() const { return p_; }
    std::span<const double> column(std::size_t j) const { return {values_.data() + j * n_, n_}; }
    std::span<const std::uint32_t> order(std::size_t j) const { return {order_.data() + j * n_, n_}; }
    double at(std::size_t row, std::size_t j) const { return values_[j * n_ + row]; }

private:
    std::size_t n_ = 0;
    std::size_t p_ = 0;
    std::vector<double> values_;
    std::vector<std::uint32_t> order_;
};

/// Leaf statistics handed to the leaf-value callback.
struct LeafStats {
    double grad_sum = 0.0;
    double hess_sum = 0.0;
    double target_min = 0.0;
    double target_max = 0.0;
};

/// Settings of the shared exact greedy grower. A split's gain is
///   S(GL)^2/(HL+lambda) + S(GR)^2/(HR+lambda) - S(G)^2/(H+lambda),
/// S(g) = sign(g) max(0, |g| - alpha), which for lambda = alpha = 0, unit
/// hessians and g = -y equals the CART squared-error reduction.
struct GrowConfig {
    double lambda = 0.0;
    double alpha = 0.0;
    /// Each child needs a hessian sum of at least this.
    double min_child_hessian = 1.0;
    /// A node needs a hessian sum of at least this to be considered.
    double min_split_hessian = 2.0;
    /// Root has depth 0; a node at max_depth is a leaf. Negative = unlimited.
    int max_depth = -1;
    /// Make nodes whose target values are all equal into leaves.
    bool stop_on_pure_target = false;
    /// Features drawn per node from `features`; 0 = use all of `features`.
    std::size_t features_per_node = 0;
};

/// Grows one tree level by level. Rows with hess == 0 do not participate.
/// `target` is only consulted for purity checks and leaf statistics; pass an
/// empty span when unused. Per-node feature draws come from `rng`.
RegressionTree grow_tree(const SortedColumns& columns,
                         std::span<const double> grad,
                         std::span<const double> hess,
                         std::span<const double> target,
                         std::span<const std::size_t> features,
                         const GrowConfig& config,
                         Rng* rng,
                         const std::function<double(const LeafStats&)>& leaf_value);

}  // namespace treetune
