#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mlnl {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool all_finite() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Seeded pseudo-random stream: xoshiro256** seeded through splitmix64.
///
/// The generator is fixed so that a seed produces the same sequence on every
/// platform. `derive` builds a child stream from the *seed* and a label, never
/// from the current state, so sub-streams do not depend on how many draws were
/// made from the parent.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller (the spare value is cached).
    double normal();

    RandomStream derive(std::string_view label) const;
    RandomStream derive(std::string_view label, std::uint64_t index) const;

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t fnv1a64(std::string_view text);

double sigmoid(double x);
/// Inverse of the sigmoid; p must lie in (0, 1).
double logit(double p);
std::vector<double> softmax(std::span<const double> v);
void softmax_into(std::span<const double> v, std::span<double> out);

/// Draws uniformly from {0..n-1} minus `excluded` by rejection.
/// Throws std::invalid_argument when the complement is empty.
std::size_t draw_uniform_index(RandomStream& stream, std::size_t n, std::span<const std::size_t> excluded);
/// Same, with exclusion given as a mask of length n.
std::size_t draw_uniform_index(RandomStream& stream, const std::vector<bool>& excluded_mask);

/// Left-to-right sum.
double sum(std::span<const double> v);

/// `%.17g` rendering; reads back to exactly `value`.
std::string format_double(double value);
/// Strict parse of a full token as a double; returns false on any trailing garbage.
bool parse_double(std::string_view token, double& out);

}  // namespace mlnl
