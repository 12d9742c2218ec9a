#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "mlnl/dataset.hpp"
#include "mlnl/error.hpp"
#include "support.hpp"

using namespace mlnl;
using testing::popcount;

TEST_SUITE("dataset") {

TEST_CASE("generate: mean cardinality") {
    GenConfig cfg;
    cfg.n = 5000;
    cfg.k = 8;
    cfg.mean_labels_per_sample = 2.9;
    const Dataset ds = generate(cfg);
    const double mean = static_cast<double>(ds.total_positives()) / static_cast<double>(ds.size());
    CHECK(mean >= 2.6);
    CHECK(mean <= 3.2);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds.cardinality(i) >= 1);
        CHECK(ds.cardinality(i) <= cfg.k - 1);
    }
}

TEST_CASE("generate: uniform class frequencies without imbalance or correlation") {
    GenConfig cfg;
    cfg.n = 5000;
    cfg.imbalance_exponent = 0.0;
    cfg.correlation_strength = 0.0;
    const Dataset ds = generate(cfg);
    const double n = static_cast<double>(ds.size());
    const double p = static_cast<double>(ds.total_positives()) / (n * static_cast<double>(cfg.k));
    const double sd = std::sqrt(n * p * (1.0 - p));
    for (std::size_t k = 0; k < cfg.k; ++k) {
        double c = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) c += ds.y(i)[k];
        CHECK(std::abs(c - n * p) <= 3.0 * sd);
    }
}

TEST_CASE("generate: imbalance makes early classes more frequent") {
    GenConfig cfg;
    cfg.n = 5000;
    cfg.imbalance_exponent = 1.5;
    const Dataset ds = generate(cfg);
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        first += ds.y(i)[0];
        last += ds.y(i)[cfg.k - 1];
    }
    CHECK(first > 2.0 * last);
}

TEST_CASE("generate: replay is bit-identical and the seed matters") {
    GenConfig cfg;
    cfg.n = 800;
    CHECK(generate(cfg) == generate(cfg));
    GenConfig other = cfg;
    other.seed = cfg.seed + 1;
    CHECK_FALSE(generate(cfg) == generate(other));
}

TEST_CASE("generate: config validation") {
    GenConfig cfg;
    cfg.mean_labels_per_sample = 9.0;
    CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
    cfg = GenConfig{};
    cfg.correlation_strength = 1.5;
    CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
    cfg = GenConfig{};
    cfg.feature_noise_sigma = 0.0;
    CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
}

TEST_CASE("strip_single_label") {
    RandomStream rng(3);
    const Dataset three = testing::random_dataset(20, 4, 6, rng, 3, 3);
    CHECK(strip_single_label(three).singles.empty());
    CHECK(strip_single_label(three).multi_only.size() == 20);

    const Dataset ones = testing::random_dataset(20, 4, 6, rng, 1, 1);
    CHECK(strip_single_label(ones).multi_only.empty());

    const Dataset mixed = testing::random_dataset(10, 3, 5, rng, 1, 3);
    const auto split = strip_single_label(mixed);
    CHECK(split.singles.size() + split.multi_only.size() == 10);
    std::size_t si = 0, mi = 0;
    for (std::size_t i = 0; i < mixed.size(); ++i) {
        const auto y = mixed.y(i);
        const auto expected_x = mixed.x(i);
        if (popcount(y) == 1) {
            REQUIRE(si < split.singles.size());
            CHECK(std::equal(expected_x.begin(), expected_x.end(), split.singles.x(si).begin()));
            ++si;
        } else {
            REQUIRE(mi < split.multi_only.size());
            CHECK(std::equal(y.begin(), y.end(), split.multi_only.y(mi).begin()));
            ++mi;
        }
    }
    CHECK(si == split.singles.size());
    CHECK(mi == split.multi_only.size());
}

TEST_CASE("split_gold_silver sizes") {
    RandomStream rng(4);
    const Dataset ds = testing::random_dataset(1000, 2, 4, rng);
    SplitSpec spec;
    spec.trusted_fraction = 0.10;
    const auto s = split_gold_silver(ds, spec);
    CHECK(s.gold.size() == 100);
    CHECK(s.silver.size() == 900);

    // Count used for the 5% ablation on the paper's training set size.
    const Dataset big(65268, 1, 2);
    spec.trusted_fraction = 0.05;
    CHECK(split_gold_silver(big, spec).gold.size() == 3263);
}

TEST_CASE("split_gold_silver partitions for random specs") {
    RandomStream rng(8);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 5 + rng.below(300);
        const Dataset ds = testing::random_dataset(n, 2, 4, rng);
        SplitSpec spec;
        spec.trusted_fraction = 0.02 + 0.9 * rng.uniform();
        spec.seed = rng.next_u64();
        const auto s = split_gold_silver(ds, spec);
        std::set<std::size_t> all(s.gold_indices.begin(), s.gold_indices.end());
        for (std::size_t i : s.silver_indices) CHECK(all.insert(i).second);
        CHECK(all.size() == n);
        CHECK(*all.rbegin() == n - 1);
        CHECK(std::is_sorted(s.gold_indices.begin(), s.gold_indices.end()));
        for (std::size_t g = 0; g < s.gold.size(); ++g) {
            const auto want = ds.y(s.gold_indices[g]);
            CHECK(std::equal(want.begin(), want.end(), s.gold.y(g).begin()));
        }
    }
}

TEST_CASE("build_single_label_pool") {
    // Class 0 has 4 samples, class 1 has 30.
    Dataset singles(34, 1, 3);
    for (std::size_t i = 0; i < 34; ++i) {
        singles.features(i, 0) = static_cast<double>(i);
        singles.y(i)[i < 4 ? 0 : 1] = 1;
    }
    const auto limited = build_single_label_pool(singles, 10, 1);
    std::size_t c0 = 0, c1 = 0;
    for (std::size_t i = 0; i < limited.pool.size(); ++i) {
        CHECK(popcount(limited.pool.y(i)) == 1);
        c0 += limited.pool.y(i)[0];
        c1 += limited.pool.y(i)[1];
        if (i > 0) CHECK(limited.pool.features(i, 0) > limited.pool.features(i - 1, 0));
    }
    CHECK(c0 == 4);
    CHECK(c1 == 10);
    CHECK(limited.empty_classes == std::vector<std::size_t>{2});

    const auto all = build_single_label_pool(singles, std::nullopt, 1);
    CHECK(all.pool == singles);

    Dataset bad = singles;
    bad.y(0)[2] = 1;
    CHECK_THROWS_AS(build_single_label_pool(bad, 10, 1), std::invalid_argument);
}

TEST_CASE("single-label pool from generated data respects the budget") {
    GenConfig cfg;
    cfg.n = 4000;
    const auto split = strip_single_label(generate(cfg));
    const auto pool = build_single_label_pool(split.singles, 50, 7);
    CHECK(pool.pool.size() <= 50 * cfg.k);
    for (std::size_t i = 0; i < pool.pool.size(); ++i) CHECK(pool.pool.cardinality(i) == 1);
}

TEST_CASE("dataset text round trip") {
    RandomStream rng(12);
    Dataset ds = testing::random_dataset(25, 3, 5, rng, 0, 4);
    ds.features(0, 0) = 1e-300;
    ds.features(1, 1) = -123456789.123456789;
    std::stringstream io;
    write_dataset(ds, io);
    CHECK(read_dataset(io) == ds);

    ds.tag = DatasetTag::noisy;
    std::stringstream io2;
    write_dataset(ds, io2);
    CHECK(read_dataset(io2) == ds);
}

TEST_CASE("dataset parsing") {
    std::istringstream ok("# comment\nMLNL v1 3 2 4\n0.5 1 | 0 3\n-2 3e2 | 1\n0 0 |\n");
    const Dataset ds = read_dataset(ok);
    CHECK(ds.size() == 3);
    CHECK(ds.dim() == 2);
    CHECK(ds.class_count == 4);
    CHECK(ds.features(1, 1) == 300.0);
    CHECK(ds.y(0)[3] == 1);
    CHECK(ds.cardinality(2) == 0);

    auto line_of = [](const std::string& text) -> std::size_t {
        std::istringstream in(text);
        try {
            read_dataset(in);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of("MLNL v1 2 2 4\n0 0 | 1\n0 0 | 4\n") == 3);
    CHECK(line_of("MLNL v2 1 1 1\n0 | 0\n") == 1);
    CHECK(line_of("MLNL v1 1 2 3\n0 | 0\n") == 2);
    CHECK(line_of("MLNL v1 1 1 3\n0 0\n") == 2);
    CHECK(line_of("MLNL v1 1 1 3\n0 | 2 1\n") == 2);
    CHECK(line_of("MLNL v1 1 1 3\n0 | 1\n0 | 1\n") == 3);
    CHECK(line_of("MLNL v1 2 1 3\n0 | 1\n") == 3);
    CHECK(line_of("MLNL v1 1 1 3\nx | 1\n") == 2);
}

TEST_CASE("split_train_test") {
    RandomStream rng(2);
    const Dataset ds = testing::random_dataset(100, 2, 3, rng);
    auto [train, test] = split_train_test(ds, 0.2, 9);
    CHECK(train.size() == 80);
    CHECK(test.size() == 20);
    CHECK_THROWS_AS(split_train_test(ds, 1.0, 9), std::invalid_argument);
}

}
