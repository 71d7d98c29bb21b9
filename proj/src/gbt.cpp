#include "treetune/gbt.hpp"

#include <algorithm>
#include <cmath>

#include "treetune/error.hpp"
#include "treetune/metrics.hpp"
#include "treetune/rng.hpp"
#include "treetune/util.hpp"

namespace treetune {

void GbtHyperParams::validate() const {
    if (nrounds < 1) throw ParamError("nrounds must be at least 1, got " + std::to_string(nrounds));
    if (!(eta > 0.0 && eta <= 1.0)) throw ParamError("eta must lie in (0, 1], got " + format_double(eta));
    if (!(subsample > 0.0 && subsample <= 1.0))
        throw ParamError("subsample must lie in (0, 1], got " + format_double(subsample));
    if (max_depth < 1) throw ParamError("max_depth must be at least 1, got " + std::to_string(max_depth));
    if (!(min_child_weight > 0.0 && std::isfinite(min_child_weight)))
        throw ParamError("min_child_weight must be positive, got " + format_double(min_child_weight));
    if (!(colsample_bytree > 0.0 && colsample_bytree <= 1.0))
        throw ParamError("colsample_bytree must lie in (0, 1], got " + format_double(colsample_bytree));
    if (!(alpha >= 0.0 && std::isfinite(alpha)))
        throw ParamError("alpha must be non-negative, got " + format_double(alpha));
    if (!(lambda >= 0.0 && std::isfinite(lambda)))
        throw ParamError("lambda must be non-negative, got " + format_double(lambda));
}

double leaf_weight(double gradient_sum, double hessian_sum, double lambda, double alpha) {
    const double denom = hessian_sum + lambda;
    if (!(denom > 0.0)) throw ParamError("leaf weight undefined: hessian sum + lambda is not positive");
    if (gradient_sum > alpha) return -(gradient_sum - alpha) / denom;
    if (gradient_sum < -alpha) return -(gradient_sum + alpha) / denom;
    return 0.0;
}

double split_gain(double gl, double hl, double gr, double hr, double lambda, double alpha) {
    auto s = [alpha](double g) {
        const double t = std::max(0.0, std::abs(g) - alpha);
        return t * t;
    };
    return 0.5 * (s(gl) / (hl + lambda) + s(gr) / (hr + lambda) - s(gl + gr) / (hl + hr + lambda));
}

BoostedModel fit_gbt(const Dataset& train, const GbtHyperParams& params, std::uint64_t seed) {
    params.validate();
    if (!train.is_dense()) throw DataError("boosting needs a cleaned dataset without missing cells");
    const std::size_t n = train.n();
    const std::size_t p = train.p();
    const auto row_count = round_half_up(params.subsample * static_cast<double>(n));
    if (row_count < 1)
        throw ParamError("subsample " + format_double(params.subsample) + " of " + std::to_string(n) +
                         " rows selects no rows");
    const auto col_count = static_cast<std::size_t>(std::clamp<std::int64_t>(
        round_half_up(params.colsample_bytree * static_cast<double>(p)), 1, static_cast<std::int64_t>(p)));

    const Matrix& x = train.features();
    const auto y = train.response();
    const SortedColumns columns(x);

    BoostedModel model;
    model.params = params;
    model.seed = seed;
    model.n_features = p;
    model.base_score = mean(y);
    model.trees.reserve(static_cast<std::size_t>(params.nrounds));

    GrowConfig config;
    config.lambda = params.lambda;
    config.alpha = params.alpha;
    config.min_child_hessian = params.min_child_weight;
    config.min_split_hessian = 2.0 * params.min_child_weight;
    config.max_depth = params.max_depth;

    const double eta = params.eta;
    auto leaf = [&](const LeafStats& s) {
        return eta * leaf_weight(s.grad_sum, s.hess_sum, params.lambda, params.alpha);
    };

    std::vector<double> pred(n, model.base_score);
    std::vector<double> grad(n);
    std::vector<double> hess(n);
    const bool all_rows = static_cast<std::size_t>(row_count) == n;
    const bool all_cols = col_count == p;
    std::vector<std::size_t> every_col(p);
    for (std::size_t j = 0; j < p; ++j) every_col[j] = j;

    for (int round = 0; round < params.nrounds; ++round) {
        Rng rng = Rng::stream(seed, 0xb005, static_cast<std::uint64_t>(round));
        if (all_rows) {
            std::fill(hess.begin(), hess.end(), 1.0);
        } else {
            std::fill(hess.begin(), hess.end(), 0.0);
            for (std::size_t r : rng.sample_without_replacement(n, static_cast<std::size_t>(row_count)))
                hess[r] = 1.0;
        }
        std::vector<std::size_t> cols = all_cols ? every_col : rng.sample_without_replacement(p, col_count);
        for (std::size_t r = 0; r < n; ++r) grad[r] = pred[r] - y[r];

        RegressionTree tree = grow_tree(columns, grad, hess, {}, cols, config, nullptr, leaf);
        for (std::size_t r = 0; r < n; ++r) pred[r] += tree.predict(x.row(r));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

std::vector<double> predict_gbt(const BoostedModel& model, const Matrix& features, std::size_t rounds) {
    if (features.cols() != model.n_features)
        throw DataError("feature matrix has " + std::to_string(features.cols()) +
                        " columns, model expects " + std::to_string(model.n_features));
    auto v = features.values();
    if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }))
        throw DataError("non-finite feature value passed to predict");
    rounds = std::min(rounds, model.trees.size());
    std::vector<double> out(features.rows(), model.base_score);
    for (std::size_t i = 0; i < features.rows(); ++i) {
        auto row = features.row(i);
        for (std::size_t t = 0; t < rounds; ++t) out[i] += model.trees[t].predict(row);
    }
    return out;
}

std::vector<double> predict_gbt(const BoostedModel& model, const Matrix& features) {
    return predict_gbt(model, features, model.trees.size());
}

}  // namespace treetune
