#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support.hpp"
#include "treetune/error.hpp"
#include "treetune/metrics.hpp"
#include "treetune/rf.hpp"
#include "treetune/rng.hpp"
#include "treetune/tree.hpp"

using namespace treetune;

namespace {

Dataset four_rows() {
    Matrix x(4, 1);
    for (std::size_t i = 0; i < 4; ++i) x(i, 0) = static_cast<double>(i + 1);
    return Dataset("four", "y", {"x"}, {0, 0, 10, 10}, std::move(x));
}

std::vector<std::size_t> iota_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    std::iota(r.begin(), r.end(), 0);
    return r;
}

RfHyperParams exact_params(int trees) {
    RfHyperParams p;
    p.mtry_fraction = 1.0;
    p.num_trees = trees;
    p.replace = false;
    p.min_node_size_exponent = 0.0;
    p.sample_fraction = 1.0;
    return p;
}

}  // namespace

TEST_SUITE("rf_engine") {

TEST_CASE("best_split on the four-row fixture") {
    auto d = four_rows();
    std::vector<std::size_t> feats{0};
    auto rows = iota_rows(4);
    auto s = best_split(d.features(), d.response(), rows, feats, 1);
    REQUIRE(s.has_value());
    CHECK(s->feature == 0);
    CHECK(s->threshold > 2.0);
    CHECK(s->threshold < 3.0);
    CHECK(s->reduction == doctest::Approx(100.0));
}

TEST_CASE("best_split returns nothing on a constant response") {
    Matrix x(5, 2);
    for (std::size_t i = 0; i < 5; ++i) {
        x(i, 0) = static_cast<double>(i);
        x(i, 1) = static_cast<double>(5 - i);
    }
    std::vector<double> y(5, 3.0);
    std::vector<std::size_t> feats{0, 1};
    auto rows = iota_rows(5);
    CHECK_FALSE(best_split(x, y, rows, feats, 1).has_value());
}

TEST_CASE("best_split honours the minimum node size") {
    auto d = four_rows();
    std::vector<std::size_t> feats{0};
    auto rows = iota_rows(4);
    CHECK(best_split(d.features(), d.response(), rows, feats, 2).has_value());
    CHECK_FALSE(best_split(d.features(), d.response(), rows, feats, 3).has_value());
}

TEST_CASE("best_split matches brute force, including repeated rows") {
    Rng rng(77);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 2 + rng.below(40), p = 1 + rng.below(4);
        const bool discrete = rep % 2 == 0;
        Matrix x(n, p);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) x(i, j) = discrete ? static_cast<double>(rng.below(4)) : rng.uniform();
            y[i] = discrete ? static_cast<double>(rng.below(3)) : rng.uniform(-2, 2);
        }
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < n; ++i) rows.push_back(rep % 3 == 0 ? rng.below(n) : i);
        std::vector<std::size_t> feats = iota_rows(p);
        const std::size_t min_node = 1 + rng.below(3);

        auto got = best_split(x, y, rows, feats, min_node);
        auto all = testing::oracle::all_splits(x, y, rows, min_node);
        double best = 0.0;
        for (auto& s : all) best = std::max(best, s.reduction);
        const double tol = 1e-9 * (1.0 + testing::oracle::sse([&] {
                                       std::vector<double> v;
                                       for (auto r : rows) v.push_back(y[r]);
                                       return v;
                                   }()));
        if (best <= tol) {
            CHECK_FALSE(got.has_value());
            continue;
        }
        REQUIRE(got.has_value());
        CHECK(got->reduction == doctest::Approx(best).epsilon(1e-9));
        auto first = std::find_if(all.begin(), all.end(), [&](auto& s) { return s.reduction >= best - tol; });
        CHECK(got->feature == first->feature);
        CHECK(got->threshold == first->threshold);
    }
}

TEST_CASE("split thresholds separate neighbouring values") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        double lo = rng.uniform(-1e6, 1e6);
        double hi = std::nextafter(lo, 1e300);
        if (i % 2) hi = lo + rng.uniform(0, 10);
        if (!(hi > lo)) continue;
        double t = split_threshold(lo, hi);
        CHECK(lo <= t);
        CHECK(t < hi);
    }
}

TEST_CASE("hyperparameter resolution") {
    RfHyperParams p;
    CHECK(p.num_trees == 500);
    CHECK(p.replace);
    CHECK(p.effective_mtry(16) == 4);
    CHECK(p.effective_min_node_size(571) == 1);
    p.min_node_size_exponent = 1.0;
    CHECK(p.effective_min_node_size(571) == 571);
    p.min_node_size_exponent = 0.5;
    CHECK(p.effective_min_node_size(100) == 10);
    p.mtry_fraction = 0.0;
    CHECK_THROWS_AS(p.validate(), ParamError);
    p.mtry_fraction = 0.3;
    p.sample_fraction = 1.2;
    CHECK_THROWS_AS(p.validate(), ParamError);
}

TEST_CASE("unsplittable root predicts the bag mean") {
    auto d = testing::random_dataset(60, 3, 4);
    RfHyperParams p = exact_params(5);
    p.min_node_size_exponent = 1.0;
    auto f = fit_forest(d, p, 9);
    const double ybar = mean(d.response());
    for (auto v : predict(f, d.features())) CHECK(v == doctest::Approx(ybar).epsilon(1e-12));
    for (const auto& t : f.trees) CHECK(t.nodes.size() == 1);
}

TEST_CASE("constant response gives constant predictions") {
    auto d0 = testing::random_dataset(30, 2, 4);
    std::vector<double> y(30, 4.25);
    Dataset d("c", "y", d0.feature_names(), y, d0.features());
    auto f = fit_forest(d, RfHyperParams{}, 1);
    auto pred = predict(f, d.features());
    for (auto v : pred) CHECK(v == 4.25);
    CHECK_THROWS_AS(nse(d.response(), pred), MetricError);
}

TEST_CASE("interpolation with full-size unbagged trees") {
    auto d = testing::friedman1(150, 6, 1.0, 12);
    auto f = fit_forest(d, exact_params(20), 3);
    auto pred = predict(f, d.features());
    CHECK(nse(d.response(), pred) == 1.0);
}

TEST_CASE("predictions stay inside the training response range") {
    auto d = testing::friedman1(120, 5, 1.0, 2);
    auto [lo, hi] = std::minmax_element(d.response().begin(), d.response().end());
    RfHyperParams p;
    p.num_trees = 30;
    auto f = fit_forest(d, p, 5);
    Rng rng(3);
    Matrix q(500, 5);
    for (std::size_t i = 0; i < 500; ++i)
        for (std::size_t j = 0; j < 5; ++j) q(i, j) = rng.uniform(-1.0, 2.0);
    for (double v : predict(f, q)) {
        CHECK(v >= *lo);
        CHECK(v <= *hi);
    }
}

TEST_CASE("single-tree forest and identical trees") {
    auto d = testing::random_dataset(40, 3, 1);
    RfHyperParams p;
    p.num_trees = 1;
    auto f = fit_forest(d, p, 2);
    auto pred = predict(f, d.features());
    for (std::size_t i = 0; i < d.n(); ++i) CHECK(pred[i] == f.trees[0].predict(d.features().row(i)));

    Forest same = f;
    same.trees.assign(7, f.trees[0]);
    auto pred7 = predict(same, d.features());
    CHECK(pred7 == pred);
}

TEST_CASE("prefix property over tree count") {
    auto d = testing::friedman1(80, 5, 1.0, 3);
    RfHyperParams p;
    p.num_trees = 10;
    auto small = fit_forest(d, p, 42);
    p.num_trees = 25;
    auto large = fit_forest(d, p, 42);
    for (std::size_t t = 0; t < 10; ++t) CHECK(small.trees[t] == large.trees[t]);
}

TEST_CASE("fitted forest does not depend on row order or worker count") {
    auto d = testing::friedman1(90, 5, 1.0, 8);
    std::vector<std::size_t> perm = iota_rows(d.n());
    Rng rng(6);
    rng.shuffle(std::span<std::size_t>(perm));
    auto shuffled = d.subset(perm);
    RfHyperParams p;
    p.num_trees = 15;
    p.sample_fraction = 0.7;
    auto a = fit_forest(d, p, 17, 1);
    auto b = fit_forest(shuffled, p, 17, 1);
    auto c = fit_forest(d, p, 17, 4);
    CHECK(a.trees == b.trees);
    CHECK(a.trees == c.trees);
}

TEST_CASE("column permutation leaves the error distribution unchanged") {
    auto train = testing::friedman1(150, 6, 1.0, 21);
    auto test = testing::friedman1(200, 6, 1.0, 22);
    std::vector<std::size_t> cols{5, 3, 1, 0, 4, 2};
    Dataset train_p("p", "y", train.feature_names(), {train.response().begin(), train.response().end()},
                    train.features().select_cols(cols));
    Matrix test_p = test.features().select_cols(cols);
    RfHyperParams p;
    p.num_trees = 40;
    std::vector<double> a, b;
    for (std::uint64_t s = 0; s < 10; ++s) {
        a.push_back(nse(test.response(), predict(fit_forest(train, p, s), test.features())));
        b.push_back(nse(test.response(), predict(fit_forest(train_p, p, s), test_p)));
    }
    const double se = std::sqrt((sample_sd(a) * sample_sd(a) + sample_sd(b) * sample_sd(b)) / 10.0);
    CHECK(std::abs(mean(a) - mean(b)) <= 3.0 * se + 1e-12);
}

TEST_CASE("prediction input checks") {
    auto d = testing::random_dataset(20, 3, 1);
    RfHyperParams p;
    p.num_trees = 2;
    auto f = fit_forest(d, p, 1);
    CHECK_THROWS_AS(predict(f, Matrix(2, 4)), DataError);
    p.sample_fraction = 0.01;
    CHECK_THROWS_AS(fit_forest(d, p, 1), ParamError);
}

}
