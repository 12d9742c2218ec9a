#include "mlnl/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mlnl {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
        throw std::invalid_argument("Matrix: entry count does not match rows*cols");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64(sm);
}

std::uint64_t RandomStream::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RandomStream::below: n must be positive");
    // Rejection on the top of the range removes modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double RandomStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

RandomStream RandomStream::derive(std::string_view label) const {
    std::uint64_t mix = seed_ ^ fnv1a64(label);
    return RandomStream(splitmix64(mix));
}

RandomStream RandomStream::derive(std::string_view label, std::uint64_t index) const {
    std::uint64_t mix = seed_ ^ fnv1a64(label);
    std::uint64_t base = splitmix64(mix);
    base ^= index * 0xd1b54a32d192ed03ULL;
    return RandomStream(splitmix64(base));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("logit: argument must lie in (0,1)");
    return std::log(p) - std::log1p(-p);
}

void softmax_into(std::span<const double> v, std::span<double> out) {
    if (v.empty()) return;
    const double peak = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - peak);
        total += out[i];
    }
    for (std::size_t i = 0; i < v.size(); ++i) out[i] /= total;
}

std::vector<double> softmax(std::span<const double> v) {
    std::vector<double> out(v.size());
    softmax_into(v, out);
    return out;
}

std::size_t draw_uniform_index(RandomStream& stream, std::size_t n, std::span<const std::size_t> excluded) {
    std::vector<bool> mask(n, false);
    for (std::size_t e : excluded) {
        if (e < n) mask[e] = true;
    }
    return draw_uniform_index(stream, mask);
}

std::size_t draw_uniform_index(RandomStream& stream, const std::vector<bool>& excluded_mask) {
    const std::size_t n = excluded_mask.size();
    if (std::find(excluded_mask.begin(), excluded_mask.end(), false) == excluded_mask.end()) {
        throw std::invalid_argument("draw_uniform_index: every index is excluded");
    }
    for (;;) {
        const auto candidate = static_cast<std::size_t>(stream.below(n));
        if (!excluded_mask[candidate]) return candidate;
    }
}

double sum(std::span<const double> v) {
    double total = 0.0;
    for (double x : v) total += x;
    return total;
}

std::string format_double(double value) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof(buf), "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(len));
}

bool parse_double(std::string_view token, double& out) {
    if (token.empty()) return false;
    if (token.front() == '+') token.remove_prefix(1);
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

}  // namespace mlnl
