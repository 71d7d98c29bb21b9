#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "fixtures.hpp"
#include "support.hpp"
#include "treetune/dataset.hpp"
#include "treetune/error.hpp"
#include "treetune/util.hpp"

using namespace treetune;

TEST_SUITE("dataset") {

TEST_CASE("parse a dense CSV") {
    auto d = parse_csv("q,a,b\n1,2,3\n4,5,6\n7,8,9\n10,11,12\n", "t");
    CHECK(d.n() == 4);
    CHECK(d.p() == 2);
    CHECK(d.response_name() == "q");
    CHECK(d.feature_names() == std::vector<std::string>{"a", "b"});
    CHECK(d.response()[3] == 10.0);
    CHECK(d.features()(2, 1) == 9.0);
    CHECK(d.is_dense());
}

TEST_CASE("response column can be chosen") {
    auto d = parse_csv("a,q,b\n1,2,3\n4,5,6\n", "t", 1);
    CHECK(d.response_name() == "q");
    CHECK(d.feature_names() == std::vector<std::string>{"a", "b"});
    CHECK(d.response()[1] == 5.0);
}

TEST_CASE("missing markers") {
    CHECK(is_missing_marker(""));
    CHECK(is_missing_marker(" NA "));
    CHECK(is_missing_marker("nan"));
    CHECK(is_missing_marker("NaN"));
    CHECK_FALSE(is_missing_marker("0"));
    CHECK_FALSE(is_missing_marker("N"));
}

TEST_CASE("malformed CSV is a data error") {
    CHECK_THROWS_AS(parse_csv("", "t"), DataError);
    CHECK_THROWS_AS(parse_csv("q,a\n", "t"), DataError);
    CHECK_THROWS_AS(parse_csv("q,a\n1,abc\n", "t"), DataError);
    CHECK_THROWS_AS(parse_csv("q,a\n1,2,3\n", "t"), DataError);
    CHECK_THROWS_AS(parse_csv("q\n1\n", "t"), DataError);
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), DataError);
}

TEST_CASE("missing response rows are flagged and removed by clean") {
    auto raw = parse_csv(fixtures::kMissingResponse, "r");
    CHECK(raw.n() == 10);
    CHECK(std::isnan(raw.response()[2]));
    CHECK(raw.has_missing_response());
    auto res = clean_with_report(raw, 0.5);
    CHECK(res.data.n() == 8);
    CHECK(res.report.rows_dropped == 2);
    CHECK(res.data.response()[2] == 4.5);
    CHECK(res.data.is_dense());
}

TEST_CASE("column missingness fractions and thresholds") {
    auto raw = parse_csv(fixtures::kColumnMissingness, "m");
    CHECK(raw.missing_fraction(0) == 0.0);
    CHECK(raw.missing_fraction(1) == doctest::Approx(0.2));
    CHECK(raw.missing_fraction(2) == doctest::Approx(0.6));

    auto half = clean(raw, 0.5);
    CHECK(half.feature_names() == std::vector<std::string>{"a", "b"});
    auto tenth = clean(raw, 0.1);
    CHECK(tenth.feature_names() == std::vector<std::string>{"a"});
    CHECK(half.n() == tenth.n());
}

TEST_CASE("median imputation uses rows left after response filtering") {
    auto raw = parse_csv(fixtures::kMedian, "med");
    auto res = clean_with_report(raw, 0.5);
    REQUIRE(res.data.n() == 4);
    CHECK(res.data.features()(1, 0) == 3.0);
    CHECK(res.data.imputed_cells() == 1);
    REQUIRE(res.report.imputed.size() == 1);
    CHECK(res.report.imputed[0].second == 1);
}

TEST_CASE("variants") {
    auto ten = make_variants(parse_csv(fixtures::kTenPercent, "ten"));
    REQUIRE(ten.size() == 1);
    CHECK(ten[0].report.column_threshold == 0.1);
    CHECK(ten[0].data.p() == 2);

    auto thirty = make_variants(parse_csv(fixtures::kThirtyPercent, "thirty"));
    REQUIRE(thirty.size() == 2);
    CHECK(thirty[0].report.column_threshold == 0.5);
    CHECK(thirty[1].report.column_threshold == 0.1);
    CHECK(thirty[0].data.name() != thirty[1].data.name());
    CHECK(thirty[0].data.p() == 2);
    CHECK(thirty[1].data.p() == 1);
    CHECK(thirty[0].data.n() == thirty[1].data.n());
    CHECK(thirty[0].data.response()[9] == thirty[1].data.response()[9]);
}

TEST_CASE("clean is idempotent") {
    for (const auto* text : {&fixtures::kMissingResponse, &fixtures::kColumnMissingness, &fixtures::kMedian}) {
        auto raw = parse_csv(*text, "x");
        for (double t : {0.1, 0.5, 1.0}) {
            if (text == &fixtures::kMedian && t == 0.1) continue;  // drops every column
            Dataset once = clean(raw, t);
            CHECK(clean(once, t) == once);
        }
    }
}

TEST_CASE("clean rejects bad thresholds and empty results") {
    auto raw = parse_csv(fixtures::kMedian, "x");
    CHECK_THROWS_AS(clean(raw, 0.0), ParamError);
    CHECK_THROWS_AS(clean(raw, 1.5), ParamError);
    CHECK_THROWS_AS(clean(raw, 0.1), DataError);
    CHECK_THROWS_AS(clean(parse_csv("q,a\nNA,1\n,2\n", "x"), 0.5), DataError);
}

TEST_CASE("CSV round trip keeps every bit") {
    auto d = testing::random_dataset(30, 4, 7);
    auto back = parse_csv(to_csv(d), d.name());
    CHECK(back == d);
}

TEST_CASE("train/test split sizes") {
    auto s = split_indices(100, {0.2, 1});
    CHECK(s.test.size() == 20);
    CHECK(s.train.size() == 80);
    auto s94 = split_indices(94, {0.2, 1});
    CHECK(s94.test.size() == 19);
    CHECK(s94.train.size() == 75);
    CHECK(split_indices(5, {0.2, 3}).test.size() == 1);
    CHECK_THROWS_AS(split_indices(2, {0.2, 3}), DataError);
    CHECK_THROWS_AS(split_indices(10, {0.0, 3}), ParamError);
}

TEST_CASE("split is a deterministic ordered partition") {
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        auto a = split_indices(57, {0.2, seed});
        auto b = split_indices(57, {0.2, seed});
        CHECK(a.test == b.test);
        CHECK(a.train == b.train);
        CHECK(std::is_sorted(a.test.begin(), a.test.end()));
        CHECK(std::is_sorted(a.train.begin(), a.train.end()));
        std::vector<std::size_t> all = a.train;
        all.insert(all.end(), a.test.begin(), a.test.end());
        std::sort(all.begin(), all.end());
        std::vector<std::size_t> expect(57);
        std::iota(expect.begin(), expect.end(), 0);
        CHECK(all == expect);
    }
    CHECK(split_indices(57, {0.2, 1}).test != split_indices(57, {0.2, 2}).test);

    auto d = testing::random_dataset(40, 3, 5);
    auto [train, test] = train_test_split(d, {0.2, 11});
    CHECK(train.n() == 32);
    CHECK(test.n() == 8);
}

TEST_CASE("k-fold sizes") {
    auto sizes100 = kfold_partition(100, 10, 3).fold_sizes();
    CHECK(std::all_of(sizes100.begin(), sizes100.end(), [](auto s) { return s == 10; }));

    auto sizes75 = kfold_partition(75, 10, 3).fold_sizes();
    CHECK(std::count(sizes75.begin(), sizes75.end(), 8u) == 5);
    CHECK(std::count(sizes75.begin(), sizes75.end(), 7u) == 5);

    auto loo = kfold_partition(12, 12, 3).fold_sizes();
    CHECK(std::all_of(loo.begin(), loo.end(), [](auto s) { return s == 1; }));

    CHECK_THROWS_AS(kfold_partition(10, 1, 0), ParamError);
    CHECK_THROWS_AS(kfold_partition(10, 11, 0), ParamError);
}

TEST_CASE("folds partition the rows and keep original order") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto plan = kfold_partition(53, 10, seed);
        std::set<std::size_t> seen;
        for (std::size_t f = 0; f < plan.k; ++f) {
            auto rows = plan.fold_rows(f);
            auto rest = plan.out_of_fold_rows(f);
            CHECK(std::is_sorted(rows.begin(), rows.end()));
            CHECK(std::is_sorted(rest.begin(), rest.end()));
            CHECK(rows.size() + rest.size() == 53);
            for (auto r : rows) CHECK(seen.insert(r).second);
        }
        CHECK(seen.size() == 53);
        CHECK(kfold_partition(53, 10, seed).assignments == plan.assignments);
    }
}

TEST_CASE("subset preserves the requested order") {
    auto d = testing::random_dataset(10, 2, 1);
    std::vector<std::size_t> rows{7, 2, 5};
    auto s = d.subset(rows);
    CHECK(s.n() == 3);
    CHECK(s.response()[0] == d.response()[7]);
    CHECK(s.features()(2, 1) == d.features()(5, 1));
}

TEST_CASE("fingerprint tracks content") {
    auto d = testing::random_dataset(10, 2, 1);
    CHECK(fingerprint(d) == fingerprint(testing::random_dataset(10, 2, 1)));
    CHECK(fingerprint(d) != fingerprint(testing::random_dataset(10, 2, 2)));
    CHECK(fingerprint(d) != fingerprint(d.renamed("other")));
}

TEST_CASE("load_csv reads files") {
    auto dir = std::filesystem::temp_directory_path() / "treetune_test_dataset";
    write_text_file(dir / "x.csv", fixtures::kMissingResponse);
    auto d = load_csv(dir / "x.csv");
    CHECK(d.name() == "x");
    CHECK(d.n() == 10);
    std::filesystem::remove_all(dir);
}

}
