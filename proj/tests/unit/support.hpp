#pragma once

#include <cstddef>
#include <vector>

#include "mlnl/dataset.hpp"
#include "mlnl/model.hpp"
#include "mlnl/numerics.hpp"

namespace testing {

// Gaussian features, each sample with between lo and hi distinct positives.
inline mlnl::Dataset random_dataset(std::size_t n, std::size_t d, std::size_t k, mlnl::RandomStream& rng,
                                    std::size_t lo = 1, std::size_t hi = 3) {
    mlnl::Dataset ds(n, d, k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = rng.normal();
        const std::size_t card = lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
        std::vector<std::size_t> order(k);
        for (std::size_t c = 0; c < k; ++c) order[c] = c;
        rng.shuffle(order);
        for (std::size_t c = 0; c < card; ++c) ds.y(i)[order[c]] = 1;
    }
    return ds;
}

inline mlnl::MlpModel random_model(std::vector<std::size_t> sizes, std::uint64_t seed, double scale = 1.0,
                                   mlnl::Activation act = mlnl::Activation::tanh) {
    mlnl::RandomStream rng(seed);
    return mlnl::MlpModel::random(std::move(sizes), act, scale, rng);
}

inline int popcount(std::span<const std::uint8_t> y) {
    int c = 0;
    for (auto v : y) c += v != 0;
    return c;
}

}  // namespace testing
