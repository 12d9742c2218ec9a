#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mlnl/numerics.hpp"

using namespace mlnl;

TEST_SUITE("numerics") {

TEST_CASE("sigmoid basics") {
    CHECK(sigmoid(0.0) == 0.5);
    for (double x : {0.3, 2.0, 50.0}) {
        CHECK(sigmoid(-x) == doctest::Approx(1.0 - sigmoid(x)).epsilon(1e-15));
    }
    for (double x = -30.0; x <= 30.0; x += 0.37) {
        CHECK(std::abs(sigmoid(x) + sigmoid(-x) - 1.0) <= 1e-15);
    }
}

TEST_CASE("sigmoid stays finite and accurate in the tails") {
    const double s = sigmoid(40.0);
    CHECK(std::isfinite(s));
    CHECK(s > 1.0 - 1e-15);
    CHECK(s <= 1.0);
    // Extended-precision reference.
    const long double ref_tail = std::exp(-40.0L) / (1.0L + std::exp(-40.0L));
    const long double ref = 1.0L / (1.0L + std::exp(-40.0L));
    CHECK(s == static_cast<double>(ref));
    CHECK(std::abs(sigmoid(-40.0) - static_cast<double>(ref_tail)) <= 1e-15 * static_cast<double>(ref_tail));
    CHECK(sigmoid(-800.0) == 0.0);
    CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("logit inverts sigmoid") {
    for (double x : {-5.0, -0.5, 0.0, 1.25, 7.0}) CHECK(logit(sigmoid(x)) == doctest::Approx(x).epsilon(1e-12));
    CHECK_THROWS_AS(logit(0.0), std::domain_error);
    CHECK_THROWS_AS(logit(1.0), std::domain_error);
}

TEST_CASE("softmax examples") {
    const std::vector<double> zero{0.0, 0.0, 0.0};
    for (double p : softmax(zero)) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    for (double c : {-700.0, 0.0, 3.5, 900.0}) {
        const std::vector<double> v{c, c + std::log(2.0)};
        const auto p = softmax(v);
        CHECK(p[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(p[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("softmax matches the direct formula and stays on the simplex") {
    RandomStream rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> v(8);
        for (auto& x : v) x = 6.0 * rng.normal();
        const auto p = softmax(v);
        double peak = v[0];
        for (double x : v) peak = std::max(peak, x);
        double z = 0.0;
        for (double x : v) z += std::exp(x - peak);
        double total = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            CHECK(std::abs(p[i] - std::exp(v[i] - peak) / z) <= 1e-12);
            CHECK(p[i] >= 0.0);
            total += p[i];
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
}

TEST_CASE("draw_uniform_index") {
    RandomStream rng(5);
    const std::vector<std::size_t> ex0{0};
    for (int i = 0; i < 100; ++i) CHECK(draw_uniform_index(rng, 2, ex0) == 1);

    const std::vector<std::size_t> all{0, 1, 2};
    CHECK_THROWS_AS(draw_uniform_index(rng, 3, all), std::invalid_argument);
    CHECK_THROWS_AS(draw_uniform_index(rng, std::vector<bool>(3, true)), std::invalid_argument);
}

TEST_CASE("draw_uniform_index is uniform (chi-square)") {
    RandomStream rng(2024);
    const std::size_t n = 5, draws = 50000;
    std::vector<double> counts(n, 0.0);
    for (std::size_t i = 0; i < draws; ++i) counts[draw_uniform_index(rng, n, {})] += 1.0;
    const double expected = static_cast<double>(draws) / n;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // 4 degrees of freedom, upper 0.001 quantile.
    CHECK(chi2 < 18.467);

    // Complement of {1, 3} in {0..4}: uniform over three values.
    std::vector<double> sub(n, 0.0);
    const std::vector<std::size_t> ex{1, 3};
    for (std::size_t i = 0; i < 30000; ++i) sub[draw_uniform_index(rng, n, ex)] += 1.0;
    CHECK(sub[1] == 0.0);
    CHECK(sub[3] == 0.0);
    double chi2b = 0.0;
    for (std::size_t i : {0, 2, 4}) chi2b += (sub[i] - 10000.0) * (sub[i] - 10000.0) / 10000.0;
    CHECK(chi2b < 13.816);
}

TEST_CASE("random streams replay and derive independently of draws") {
    RandomStream a(77), b(77);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    RandomStream c(77);
    const auto child1 = c.derive("noise").next_u64();
    for (int i = 0; i < 10; ++i) c.next_u64();
    CHECK(c.derive("noise").next_u64() == child1);
    CHECK(c.derive("noise", 1).next_u64() != c.derive("noise", 2).next_u64());
    CHECK(c.derive("noise").next_u64() != c.derive("split").next_u64());

    RandomStream u(3);
    for (int i = 0; i < 10000; ++i) {
        const double x = u.uniform();
        CHECK((x >= 0.0 && x < 1.0));
    }
    CHECK_THROWS_AS(u.below(0), std::invalid_argument);
}

TEST_CASE("normal draws have unit moments") {
    RandomStream rng(9);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 5.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("sum is left to right") {
    const std::vector<double> v{1e16, 1.0, -1e16, 1.0};
    CHECK(sum(v) == ((1e16 + 1.0) - 1e16) + 1.0);
}

TEST_CASE("format_double round-trips and parse_double is strict") {
    RandomStream rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double x = std::ldexp(rng.normal(), static_cast<int>(rng.below(200)) - 100);
        double back = 0.0;
        REQUIRE(parse_double(format_double(x), back));
        CHECK(back == x);
    }
    double out = 0.0;
    CHECK(parse_double("+1.5", out));
    CHECK(out == 1.5);
    CHECK_FALSE(parse_double("1.5x", out));
    CHECK_FALSE(parse_double("", out));
    CHECK_FALSE(parse_double(" 1", out));
}

TEST_CASE("matrix helpers") {
    const Matrix id = Matrix::identity(3);
    CHECK(id(0, 0) == 1.0);
    CHECK(id(0, 1) == 0.0);
    CHECK(id.all_finite());
    Matrix m(2, 2, 1.0);
    m(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_FALSE(m.all_finite());
}

}
