#include <doctest.h>

#include <cmath>
#include <numeric>

#include "support.hpp"
#include "treetune/error.hpp"
#include "treetune/hpo.hpp"

using namespace treetune;

TEST_SUITE("hpo") {

TEST_CASE("package defaults") {
    auto rf = std::get<RfHyperParams>(default_params(Algorithm::rf));
    CHECK(rf.num_trees == 500);
    CHECK(rf.replace);
    CHECK_FALSE(rf.mtry_fraction.has_value());
    CHECK(rf.effective_mtry(16) == 4);
    auto gbt = std::get<GbtHyperParams>(default_params(Algorithm::gbt));
    CHECK(gbt.eta == 0.3);
    CHECK(gbt.max_depth == 6);
}

TEST_CASE("optimal defaults") {
    auto rf = std::get<RfHyperParams>(optimal_default_params(Algorithm::rf));
    CHECK(*rf.mtry_fraction == 0.257);
    CHECK(rf.num_trees == 983);
    CHECK_FALSE(rf.replace);
    CHECK(rf.effective_min_node_size(500) == 1);
    CHECK(rf.sample_fraction == 0.703);
    auto gbt = std::get<GbtHyperParams>(optimal_default_params(Algorithm::gbt));
    CHECK(gbt.nrounds == 4168);
    CHECK(gbt.eta == 0.018);
    CHECK(gbt.subsample == 0.839);
    CHECK(gbt.max_depth == 13);
    CHECK(gbt.min_child_weight == 2.06);
    CHECK(gbt.colsample_bytree == 0.752);
    CHECK(gbt.lambda == 0.982);
    CHECK(gbt.alpha == 1.113);
    CHECK_NOTHROW(validate(optimal_default_params(Algorithm::rf)));
    CHECK_NOTHROW(validate(optimal_default_params(Algorithm::gbt)));
}

TEST_CASE("random samples respect the search space") {
    for (auto alg : {Algorithm::rf, Algorithm::gbt}) {
        auto space = SearchSpace::for_algorithm(alg);
        Rng rng(alg == Algorithm::rf ? 1 : 2);
        for (int i = 0; i < 1000; ++i) {
            auto p = sample_random(space, rng);
            CHECK(space.contains(p, 571));
            CHECK_NOTHROW(validate(p));
            if (auto* rf = std::get_if<RfHyperParams>(&p)) {
                auto node = rf->effective_min_node_size(571);
                CHECK(node >= 1);
                CHECK(node <= 571);
                CHECK(rf->num_trees >= 10);
                CHECK(rf->num_trees <= 2000);
            } else {
                auto& g = std::get<GbtHyperParams>(p);
                CHECK(g.eta >= std::ldexp(1.0, -10));
                CHECK(g.eta <= 1.0);
                CHECK(g.max_depth >= 1);
                CHECK(g.max_depth <= 15);
                CHECK(g.nrounds >= 1);
                CHECK(g.nrounds <= 5000);
            }
        }
    }
}

TEST_CASE("random samples are seeded") {
    auto space = SearchSpace::for_algorithm(Algorithm::gbt);
    CHECK(params_to_json(sample_random(space, 5)) == params_to_json(sample_random(space, 5)));
    CHECK(params_to_json(sample_random(space, 5)) != params_to_json(sample_random(space, 6)));
}

TEST_CASE("sampled params round-trip through JSON") {
    for (auto alg : {Algorithm::rf, Algorithm::gbt}) {
        auto space = SearchSpace::for_algorithm(alg);
        for (std::uint64_t s = 0; s < 200; ++s) {
            auto p = sample_random(space, s);
            auto text = params_to_json(p).dump();
            CHECK(params_from_json(json::parse(text)) == p);
        }
        CHECK(params_from_json(params_to_json(default_params(alg))) == default_params(alg));
    }
}

TEST_CASE("evaluate_config yields one score per fold") {
    auto d = testing::friedman1(100, 5, 1.0, 3);
    auto folds = kfold_partition(d, 10, 4);
    RfHyperParams p;
    p.num_trees = 20;
    auto t = evaluate_config(d, p, folds, {7, 1});
    CHECK(t.cv_scores.size() == 10);
    CHECK(t.failed_folds() == 0);
    double s = 0.0;
    for (auto& f : t.cv_scores) s += f->nse;
    CHECK(t.cv_mean_nse == doctest::Approx(s / 10));
    CHECK(std::isfinite(t.cv_mean_kge));

    // Visiting the folds in another order gives the same mean.
    std::vector<std::size_t> order(10);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(2);
    rng.shuffle(std::span<std::size_t>(order));
    double shuffled = 0.0;
    for (auto f : order) shuffled += t.cv_scores[f]->nse;
    CHECK(std::abs(shuffled / 10 - t.cv_mean_nse) < 1e-12);
}

TEST_CASE("evaluate_config does not depend on worker count") {
    auto d = testing::friedman1(80, 4, 1.0, 3);
    auto folds = kfold_partition(d, 10, 4);
    GbtHyperParams p;
    p.nrounds = 30;
    auto a = evaluate_config(d, p, folds, {9, 1});
    auto b = evaluate_config(d, p, folds, {9, 4});
    CHECK(trial_to_json(a) == trial_to_json(b));
}

TEST_CASE("constant response rejects the trial") {
    auto d0 = testing::random_dataset(50, 3, 1);
    Dataset d("c", "y", d0.feature_names(), std::vector<double>(50, 2.0), d0.features());
    auto folds = kfold_partition(d, 10, 1);
    CHECK_THROWS_AS(evaluate_config(d, default_params(Algorithm::rf), folds), TrialRejected);
}

TEST_CASE("random search returns sorted, reproducible trials") {
    auto d = testing::friedman1(60, 4, 1.0, 7);
    SearchOptions o;
    o.iterations = 4;
    o.metric = Metric::nse;
    o.folds = 5;
    o.seed = 13;
    auto a = run_random_search(d, Algorithm::rf, o);
    CHECK(a.size() == 4);
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].cv_mean_nse >= a[i].cv_mean_nse);
    o.workers = 3;
    auto b = run_random_search(d, Algorithm::rf, o);
    REQUIRE(b.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(trial_to_json(a[i]) == trial_to_json(b[i]));
    CHECK_THROWS_AS(run_random_search(d, Algorithm::rf, SearchOptions{0}), ParamError);
}

TEST_CASE("trial JSON and CSV") {
    auto d = testing::friedman1(50, 3, 1.0, 1);
    auto folds = kfold_partition(d, 5, 1);
    RfHyperParams p;
    p.num_trees = 5;
    auto t = evaluate_config(d, p, folds, {1, 1});
    t.test_score = ScoreReport{0.5, 0.4, 0.9, 1.1, 0.8};
    auto j = trial_to_json(t);
    CHECK_FALSE(j.contains("wall_time"));
    CHECK(trial_to_json(trial_from_json(json::parse(j.dump()))) == j);
    CHECK(trial_to_json(t, true).contains("wall_time"));

    auto csv = trials_to_csv({t, t});
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("strategy names") {
    for (auto s : {Strategy::default_params, Strategy::opt_default, Strategy::random, Strategy::meta})
        CHECK(parse_strategy(to_string(s)) == s);
    CHECK(to_string(Strategy::default_params) == "default");
    CHECK_THROWS_AS(parse_strategy("grid"), ParamError);
}

}
