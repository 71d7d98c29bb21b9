#include "treetune/rf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "treetune/error.hpp"
#include "treetune/metrics.hpp"
#include "treetune/parallel.hpp"
#include "treetune/rng.hpp"
#include "treetune/util.hpp"

namespace treetune {

void RfHyperParams::validate() const {
    if (mtry_fraction && !(*mtry_fraction > 0.0 && *mtry_fraction <= 1.0))
        throw ParamError("mtry fraction must lie in (0, 1], got " + format_double(*mtry_fraction));
    if (num_trees < 1) throw ParamError("num_trees must be at least 1, got " + std::to_string(num_trees));
    if (!(min_node_size_exponent >= 0.0 && min_node_size_exponent <= 1.0))
        throw ParamError("min node size exponent must lie in [0, 1], got " +
                         format_double(min_node_size_exponent));
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
        throw ParamError("sample_fraction must lie in (0, 1], got " + format_double(sample_fraction));
}

double RfHyperParams::resolved_mtry_fraction(std::size_t p) const {
    if (mtry_fraction) return *mtry_fraction;
    return std::sqrt(static_cast<double>(p)) / static_cast<double>(p);
}

std::size_t RfHyperParams::effective_mtry(std::size_t p) const {
    auto m = round_half_up(resolved_mtry_fraction(p) * static_cast<double>(p));
    return static_cast<std::size_t>(std::clamp<std::int64_t>(m, 1, static_cast<std::int64_t>(p)));
}

std::size_t RfHyperParams::effective_min_node_size(std::size_t n) const {
    auto m = round_half_up(std::pow(static_cast<double>(n), min_node_size_exponent));
    return static_cast<std::size_t>(std::clamp<std::int64_t>(m, 1, static_cast<std::int64_t>(n)));
}

namespace {

std::vector<std::size_t> canonical_order(const Dataset& d) {
    std::vector<std::size_t> order(d.n());
    std::iota(order.begin(), order.end(), 0);
    const Matrix& x = d.features();
    auto y = d.response();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto ra = x.row(a);
        auto rb = x.row(b);
        for (std::size_t j = 0; j < ra.size(); ++j)
            if (ra[j] != rb[j]) return ra[j] < rb[j];
        return y[a] < y[b];
    });
    return order;
}

}  // namespace

Forest fit_forest(const Dataset& train, const RfHyperParams& params, std::uint64_t seed,
                  std::size_t workers) {
    params.validate();
    if (!train.is_dense()) throw DataError("random forest needs a cleaned dataset without missing cells");
    const std::size_t n = train.n();
    const std::size_t p = train.p();
    const auto bag_size = round_half_up(params.sample_fraction * static_cast<double>(n));
    if (bag_size < 1)
        throw ParamError("sample_fraction " + format_double(params.sample_fraction) + " of " +
                         std::to_string(n) + " rows selects no rows");

    const auto order = canonical_order(train);
    const Dataset canon = train.subset(order);
    const SortedColumns columns(canon.features());
    const auto y = canon.response();
    const double center = mean(y);

    const std::size_t min_node = params.effective_min_node_size(n);
    GrowConfig config;
    config.min_child_hessian = static_cast<double>(min_node);
    config.min_split_hessian = 2.0 * static_cast<double>(min_node);
    config.stop_on_pure_target = true;
    config.features_per_node = params.effective_mtry(p);

    std::vector<std::size_t> all_features(p);
    std::iota(all_features.begin(), all_features.end(), 0);

    auto leaf = [center](const LeafStats& s) {
        if (s.target_min == s.target_max) return s.target_min;
        // grad = -(y - center) * count
        return center - s.grad_sum / s.hess_sum;
    };

    Forest forest;
    forest.params = params;
    forest.seed = seed;
    forest.n_features = p;
    forest.trees.resize(static_cast<std::size_t>(params.num_trees));

    parallel_for(forest.trees.size(), workers, [&](std::size_t t) {
        Rng rng = Rng::stream(seed, 0x7ee5, t);
        std::vector<double> weight(n, 0.0);
        const auto m = static_cast<std::size_t>(bag_size);
        if (params.replace) {
            for (std::size_t i = 0; i < m; ++i) weight[rng.below(n)] += 1.0;
        } else {
            for (std::size_t r : rng.sample_without_replacement(n, m)) weight[r] = 1.0;
        }
        std::vector<double> grad(n);
        for (std::size_t r = 0; r < n; ++r) grad[r] = -(y[r] - center) * weight[r];
        forest.trees[t] = grow_tree(columns, grad, weight, y, all_features, config, &rng, leaf);
    });
    return forest;
}

std::vector<double> predict(const Forest& model, const Matrix& features) {
    if (features.cols() != model.n_features)
        throw DataError("feature matrix has " + std::to_string(features.cols()) +
                        " columns, model expects " + std::to_string(model.n_features));
    auto v = features.values();
    if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }))
        throw DataError("non-finite feature value passed to predict");
    std::vector<double> out(features.rows(), 0.0);
    for (std::size_t i = 0; i < features.rows(); ++i) {
        auto row = features.row(i);
        // Running mean: exact when every tree agrees.
        double m = 0.0;
        std::size_t k = 0;
        for (const auto& tree : model.trees) {
            ++k;
            m += (tree.predict(row) - m) / static_cast<double>(k);
        }
        out[i] = m;
    }
    return out;
}

}  // namespace treetune
