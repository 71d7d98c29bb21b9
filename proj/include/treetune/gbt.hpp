#pragma once

#include <cstdint>
#include <vector>

#include "treetune/dataset.hpp"
#include "treetune/tree.hpp"

namespace treetune {

/// The eight boosting hyperparameters.
struct GbtHyperParams {
    int nrounds = 500;
    double eta = 0.3;
    double subsample = 1.0;
    int max_depth = 6;
    double min_child_weight = 1.0;
    double colsample_bytree = 1.0;
    double alpha = 0.0;   // L1 on leaf weights
    double lambda = 1.0;  // L2 on leaf weights

    void validate() const;

    bool operator==(const GbtHyperParams&) const = default;
};

/// Prediction = base_score + sum of tree outputs; the eta shrinkage is
/// already folded into the stored leaf values.
struct BoostedModel {
    double base_score = 0.0;
    std::vector<RegressionTree> trees;
    GbtHyperParams params;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;

    bool operator==(const BoostedModel&) const = default;
};

/// argmin_w  G w + (H + lambda) w^2 / 2 + alpha |w|.
double leaf_weight(double gradient_sum, double hessian_sum, double lambda, double alpha);

/// Regularized gain of splitting a node into (GL, HL) and (GR, HR):
/// (S(GL)/(HL+l) + S(GR)/(HR+l) - S(GL+GR)/(HL+HR+l)) / 2 with
/// S(g) = max(0, |g| - alpha)^2. Callers accept a split only if this is
/// positive and both children meet min_child_weight.
double split_gain(double gl, double hl, double gr, double hr, double lambda, double alpha);

/// Second-order boosting with squared-error loss (g = yhat - y, h = 1).
/// Every round draws its rows without replacement (subsample) and the tree's
/// columns without replacement (colsample_bytree), then grows a tree to
/// max_depth using exact greedy split search.
BoostedModel fit_gbt(const Dataset& train, const GbtHyperParams& params, std::uint64_t seed);

std::vector<double> predict_gbt(const BoostedModel& model, const Matrix& features);

/// Predictions using only the first `rounds` trees.
std::vector<double> predict_gbt(const BoostedModel& model, const Matrix& features, std::size_t rounds);

}  // namespace treetune
