#include "treetune/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "treetune/rng.hpp"

namespace treetune {

namespace {

double soft_threshold_sq(double g, double alpha) {
    const double t = std::max(0.0, std::abs(g) - alpha);
    return t * t;
}

double node_score(double g, double h, double lambda, double alpha) {
    return soft_threshold_sq(g, alpha) / (h + lambda);
}

}  // namespace

double RegressionTree::predict(std::span<const double> row) const {
    return nodes[leaf_index(row)].value;
}

std::size_t RegressionTree::leaf_index(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const TreeNode& n = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                             : n.right);
    }
    return i;
}

std::size_t RegressionTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t RegressionTree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t deepest = 0;
    // Children are always created after their parent.
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, d[i]);
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return deepest;
}

double split_threshold(double lo, double hi) {
    double mid = 0.5 * lo + 0.5 * hi;
    if (!(mid < hi) || !(mid >= lo)) mid = lo;
    return mid;
}

std::optional<Split> best_split(const Matrix& x,
                                std::span<const double> y,
                                std::span<const std::size_t> rows,
                                std::span<const std::size_t> features,
                                std::size_t min_node) {
    if (rows.size() < 2) return std::nullopt;
    min_node = std::max<std::size_t>(min_node, 1);

    double center = 0.0;
    for (auto r : rows) center += y[r];
    center /= static_cast<double>(rows.size());
    double total = 0.0;
    for (auto r : rows) total += y[r] - center;
    const double n = static_cast<double>(rows.size());
    const double parent = total * total / n;

    std::vector<std::size_t> feats(features.begin(), features.end());
    std::sort(feats.begin(), feats.end());

    std::optional<Split> best;
    std::vector<std::pair<double, double>> pairs(rows.size());
    for (std::size_t f : feats) {
        for (std::size_t i = 0; i < rows.size(); ++i) pairs[i] = {x(rows[i], f), y[rows[i]] - center};
        std::stable_sort(pairs.begin(), pairs.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        double left_sum = 0.0;
        for (std::size_t i = 0; i + 1 < pairs.size(); ++i) {
            left_sum += pairs[i].second;
            if (pairs[i].first == pairs[i + 1].first) continue;
            const std::size_t nl = i + 1;
            const std::size_t nr = pairs.size() - nl;
            if (nl < min_node || nr < min_node) continue;
            const double right_sum = total - left_sum;
            const double sl = left_sum * left_sum / static_cast<double>(nl);
            const double sr = right_sum * right_sum / static_cast<double>(nr);
            const double gain = sl + sr - parent;
            if (!(gain > kGainTolerance * (sl + sr))) continue;
            if (!best || gain > best->reduction + kGainTolerance * (sl + sr))
                best = Split{f, split_threshold(pairs[i].first, pairs[i + 1].first), gain};
        }
    }
    return best;
}

SortedColumns::SortedColumns(const Matrix& x)
    : n_(x.rows()), p_(x.cols()), values_(x.rows() * x.cols()), order_(x.rows() * x.cols()) {
    for (std::size_t j = 0; j < p_; ++j) {
        double* col = values_.data() + j * n_;
        for (std::size_t r = 0; r < n_; ++r) col[r] = x(r, j);
        std::uint32_t* ord = order_.data() + j * n_;
        std::iota(ord, ord + n_, 0u);
        std::stable_sort(ord, ord + n_, [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }
}

namespace {

struct ActiveNode {
    std::size_t node = 0;
    double g = 0.0;
    double h = 0.0;
    double tmin = 0.0;
    double tmax = 0.0;
    int depth = 0;
};

struct Candidate {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

struct ScanState {
    double g = 0.0;
    double h = 0.0;
    double last_x = 0.0;
    bool started = false;
};

}  // namespace

RegressionTree grow_tree(const SortedColumns& columns,
                         std::span<const double> grad,
                         std::span<const double> hess,
                         std::span<const double> target,
                         std::span<const std::size_t> features,
                         const GrowConfig& config,
                         Rng* rng,
                         const std::function<double(const LeafStats&)>& leaf_value) {
    const std::size_t n = columns.n();
    const std::size_t p = columns.p();
    const bool track_target = !target.empty();

    RegressionTree tree;
    std::vector<std::int32_t> slot(n, -1);

    ActiveNode root;
    bool any = false;
    for (std::size_t r = 0; r < n; ++r) {
        if (hess[r] <= 0.0) continue;
        slot[r] = 0;
        root.g += grad[r];
        root.h += hess[r];
        if (track_target) {
            root.tmin = any ? std::min(root.tmin, target[r]) : target[r];
            root.tmax = any ? std::max(root.tmax, target[r]) : target[r];
        }
        any = true;
    }
    tree.nodes.push_back(TreeNode{});
    std::vector<ActiveNode> active{root};

    std::vector<std::size_t> sorted_features(features.begin(), features.end());
    std::sort(sorted_features.begin(), sorted_features.end());

    // Per-feature sorted row lists restricted to rows that are still active.
    std::vector<std::vector<std::uint32_t>> order(p);
    for (std::size_t j : sorted_features) {
        auto full = columns.order(j);
        order[j].reserve(n);
        for (auto r : full)
            if (slot[r] >= 0) order[j].push_back(r);
    }

    auto finish_leaf = [&](const ActiveNode& a) {
        LeafStats s{a.g, a.h, a.tmin, a.tmax};
        tree.nodes[a.node].value = leaf_value(s);
    };

    std::vector<Candidate> best;
    std::vector<ScanState> scan;
    std::vector<char> splittable;
    std::vector<char> mask;  // active.size() x p, only with per-node feature draws
    std::vector<char> feature_used(p, 0);

    while (!active.empty()) {
        const std::size_t m = active.size();
        best.assign(m, Candidate{});
        splittable.assign(m, 0);
        for (std::size_t a = 0; a < m; ++a) {
            const ActiveNode& node = active[a];
            // Every node gets its value, including internal ones.
            finish_leaf(node);
            bool ok = node.h >= config.min_split_hessian &&
                      (config.max_depth < 0 || node.depth < config.max_depth);
            if (ok && config.stop_on_pure_target && track_target && node.tmin == node.tmax) ok = false;
            splittable[a] = ok ? 1 : 0;
        }

        const bool per_node = config.features_per_node > 0;
        if (per_node) {
            mask.assign(m * p, 0);
            std::fill(feature_used.begin(), feature_used.end(), 0);
            const std::size_t pool = sorted_features.size();
            const std::size_t draw = std::min(config.features_per_node, pool);
            for (std::size_t a = 0; a < m; ++a) {
                if (!splittable[a]) continue;
                for (std::size_t idx : rng->sample_without_replacement(pool, draw)) {
                    mask[a * p + sorted_features[idx]] = 1;
                    feature_used[sorted_features[idx]] = 1;
                }
            }
        }

        bool any_splittable = std::any_of(splittable.begin(), splittable.end(), [](char c) { return c; });
        if (any_splittable) {
            for (std::size_t j : sorted_features) {
                if (per_node && !feature_used[j]) continue;
                scan.assign(m, ScanState{});
                auto col = columns.column(j);
                for (std::uint32_t r : order[j]) {
                    const std::int32_t s = slot[r];
                    if (s < 0) continue;
                    const auto a = static_cast<std::size_t>(s);
                    if (!splittable[a] || (per_node && !mask[a * p + j])) continue;
                    ScanState& st = scan[a];
                    const double xv = col[r];
                    if (st.started && xv != st.last_x) {
                        const ActiveNode& node = active[a];
                        const double hl = st.h;
                        const double hr = node.h - hl;
                        if (hl >= config.min_child_hessian && hr >= config.min_child_hessian) {
                            const double gl = st.g;
                            const double gr = node.g - gl;
                            const double sl = node_score(gl, hl, config.lambda, config.alpha);
                            const double sr = node_score(gr, hr, config.lambda, config.alpha);
                            const double gain =
                                sl + sr - node_score(node.g, node.h, config.lambda, config.alpha);
                            if (gain > kGainTolerance * (sl + sr) &&
                                (!best[a].found || gain > best[a].gain + kGainTolerance * (sl + sr)))
                                best[a] = Candidate{true, j, split_threshold(st.last_x, xv), gain};
                        }
                    }
                    st.g += grad[r];
                    st.h += hess[r];
                    st.last_x = xv;
                    st.started = true;
                }
            }
        }

        // Create children in parent order, left before right.
        std::vector<ActiveNode> next;
        std::vector<std::int32_t> child_of(m, -1);  // index into `next` of left child
        for (std::size_t a = 0; a < m; ++a) {
            if (!best[a].found) continue;
            TreeNode& parent = tree.nodes[active[a].node];
            parent.feature = static_cast<std::int32_t>(best[a].feature);
            parent.threshold = best[a].threshold;
            const auto left = static_cast<std::int32_t>(tree.nodes.size());
            parent.left = left;
            parent.right = left + 1;
            tree.nodes.push_back(TreeNode{});
            tree.nodes.push_back(TreeNode{});
            child_of[a] = static_cast<std::int32_t>(next.size());
            ActiveNode l, r;
            l.node = static_cast<std::size_t>(left);
            r.node = static_cast<std::size_t>(left + 1);
            l.depth = r.depth = active[a].depth + 1;
            l.tmin = r.tmin = std::numeric_limits<double>::infinity();
            l.tmax = r.tmax = -std::numeric_limits<double>::infinity();
            next.push_back(l);
            next.push_back(r);
        }
        if (next.empty()) break;

        for (std::size_t r = 0; r < n; ++r) {
            const std::int32_t s = slot[r];
            if (s < 0) continue;
            const auto a = static_cast<std::size_t>(s);
            if (child_of[a] < 0) {
                slot[r] = -1;
                continue;
            }
            const bool go_left = columns.at(r, best[a].feature) <= best[a].threshold;
            const std::int32_t c = child_of[a] + (go_left ? 0 : 1);
            slot[r] = c;
            ActiveNode& child = next[static_cast<std::size_t>(c)];
            child.g += grad[r];
            child.h += hess[r];
            if (track_target) {
                child.tmin = std::min(child.tmin, target[r]);
                child.tmax = std::max(child.tmax, target[r]);
            }
        }
        for (std::size_t j : sorted_features) {
            auto& ord = order[j];
            ord.erase(std::remove_if(ord.begin(), ord.end(), [&](std::uint32_t r) { return slot[r] < 0; }),
                      ord.end());
        }
        active = std::move(next);
    }
    return tree;
}

}  // namespace treetune
