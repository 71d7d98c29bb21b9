#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "treetune/error.hpp"
#include "treetune/metrics.hpp"
#include "treetune/rng.hpp"

using namespace treetune;

TEST_SUITE("metrics") {

TEST_CASE("nse hand values") {
    std::vector<double> y{1, 2, 3, 4};
    CHECK(nse(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 1.0);
    CHECK(nse(y, std::vector<double>{2.5, 2.5, 2.5, 2.5}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(nse(y, std::vector<double>{2, 2, 2, 2}) - (-0.2)) < 1e-12);
}

TEST_CASE("kge hand values") {
    std::vector<double> y{1, 2, 3};
    auto same = kge(y, y);
    CHECK(same.kge == doctest::Approx(1.0));
    CHECK(same.r == doctest::Approx(1.0));
    CHECK(same.alpha == doctest::Approx(1.0));
    CHECK(same.beta == doctest::Approx(1.0));

    auto doubled = kge(y, std::vector<double>{2, 4, 6});
    CHECK(doubled.r == doctest::Approx(1.0));
    CHECK(doubled.alpha == doctest::Approx(2.0));
    CHECK(doubled.beta == doctest::Approx(1.0));
    CHECK(std::abs(doubled.kge) < 1e-12);

    auto shifted = kge(y, std::vector<double>{4, 5, 6});
    CHECK(shifted.alpha == doctest::Approx(2.5));
    CHECK(shifted.beta == doctest::Approx(0.4));
    CHECK(std::abs(shifted.kge - (1.0 - std::sqrt(2.61))) < 1e-12);
}

TEST_CASE("undefined metrics raise MetricError") {
    std::vector<double> c{2, 2, 2};
    std::vector<double> y{1, 2, 3};
    CHECK_THROWS_AS(nse(c, y), MetricError);
    CHECK_THROWS_AS(kge(c, y), MetricError);
    CHECK_THROWS_AS(kge(std::vector<double>{1, 2, 3}, std::vector<double>{-1, 0, 1}), MetricError);
    CHECK_THROWS_AS(kge(std::vector<double>{-1, 0, 1}, y), MetricError);
    CHECK_THROWS_AS(nse(y, std::vector<double>{1, 2}), MetricError);
    CHECK_THROWS_AS(nse(std::vector<double>{1}, std::vector<double>{1}), MetricError);
}

TEST_CASE("constant predictions have no correlation") {
    auto s = kge(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 2});
    CHECK(s.r == 0.0);
    CHECK(s.alpha == 1.0);
    CHECK(s.beta == 0.0);
    CHECK(s.kge == doctest::Approx(1.0 - std::sqrt(2.0)));
}

TEST_CASE("metrics agree with a direct reimplementation on random vectors") {
    Rng rng(2024);
    for (int rep = 0; rep < 300; ++rep) {
        std::size_t n = 2 + rng.below(60);
        std::vector<double> y(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform(0.5, 20.0);
            p[i] = y[i] + rng.uniform(-5.0, 5.0);
        }
        auto s = score(y, p);
        CHECK(std::abs(s.nse - testing::oracle::nse(y, p)) < 1e-12);
        CHECK(std::abs(s.kge - testing::oracle::kge(y, p)) < 1e-12);
    }
}

TEST_CASE("nse is at most one and invariant to common affine maps") {
    Rng rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> y(20), p(20), ya(20), pa(20);
        double a = rng.uniform(0.1, 10.0) * (rng.coin() ? 1 : -1), b = rng.uniform(-50, 50);
        for (int i = 0; i < 20; ++i) {
            y[i] = rng.uniform(1, 2);
            p[i] = rng.uniform(1, 2);
            ya[i] = a * y[i] + b;
            pa[i] = a * p[i] + b;
        }
        double v = nse(y, p);
        CHECK(v <= 1.0);
        CHECK(nse(ya, pa) == doctest::Approx(v).epsilon(1e-9));
    }
}

TEST_CASE("kge components under common positive scaling") {
    Rng rng(8);
    std::vector<double> y(30), p(30), ys(30), ps(30);
    for (int i = 0; i < 30; ++i) {
        y[i] = rng.uniform(1, 5);
        p[i] = rng.uniform(1, 5);
        ys[i] = 3.5 * y[i];
        ps[i] = 3.5 * p[i];
    }
    auto a = kge(y, p), b = kge(ys, ps);
    CHECK(b.r == doctest::Approx(a.r));
    CHECK(b.alpha == doctest::Approx(a.alpha));
    CHECK(b.beta == doctest::Approx(a.beta));
}

TEST_CASE("standardize_scores") {
    auto z = standardize_scores(std::vector<double>{3, 4, 5});
    CHECK(z[0] == doctest::Approx(-1.0));
    CHECK(z[1] == doctest::Approx(0.0));
    CHECK(z[2] == doctest::Approx(1.0));
    auto c = standardize_scores(std::vector<double>{0.7, 0.7, 0.7});
    CHECK(c == std::vector<double>{0, 0, 0});

    Rng rng(3);
    std::vector<double> s(17);
    for (auto& v : s) v = rng.uniform(-3, 9);
    auto zs = standardize_scores(s);
    CHECK(std::abs(mean(zs)) < 1e-12);
    CHECK(sample_sd(zs) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("metric names") {
    CHECK(parse_metric("kge") == Metric::kge);
    CHECK(parse_metric("nse") == Metric::nse);
    CHECK(to_string(Metric::nse) == "nse");
    CHECK_THROWS_AS(parse_metric("rmse"), ParamError);
}

}
