#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mlnl/numerics.hpp"

namespace mlnl {

enum class DatasetTag { clean, noisy };

/// N samples of d real features with K-class binary label vectors.
struct Dataset {
    Matrix features;                   // N x d
    std::vector<std::uint8_t> labels;  // N x K, row-major, entries 0/1
    std::size_t class_count = 0;
    DatasetTag tag = DatasetTag::clean;

    Dataset() = default;
    Dataset(std::size_t n, std::size_t d, std::size_t k, DatasetTag t = DatasetTag::clean);

    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }
    bool empty() const { return size() == 0; }

    std::span<const double> x(std::size_t i) const { return features.row(i); }
    std::span<std::uint8_t> y(std::size_t i) { return {labels.data() + i * class_count, class_count}; }
    std::span<const std::uint8_t> y(std::size_t i) const { return {labels.data() + i * class_count, class_count}; }

    std::size_t cardinality(std::size_t i) const;
    std::size_t total_positives() const;

    /// Samples at `indices`, in that order.
    Dataset subset(std::span<const std::size_t> indices) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct GenConfig {
    std::size_t n = 12000;
    std::size_t d = 32;
    std::size_t k = 8;
    double mean_labels_per_sample = 2.9;
    double feature_noise_sigma = 1.0;
    double imbalance_exponent = 1.0;
    double correlation_strength = 0.5;
    std::uint64_t seed = 1;
    bool multi_label_only = false;

    void validate() const;
};

/// Synthetic correlated, imbalanced multi-label data.
///
/// Cardinality is 1 + Binomial(K-1, (m-1)/(K-1)), mean m, capped at K-1.
/// Labels are picked without replacement; the first from class frequencies
/// proportional to (k+1)^-alpha, later ones reweighted by a seeded random
/// co-occurrence graph mixed in with `correlation_strength`. Features are the
/// sum of active class prototypes plus isotropic Gaussian noise.
Dataset generate(const GenConfig& config);

struct SingleLabelSplit {
    Dataset multi_only;
    Dataset singles;
};

SingleLabelSplit strip_single_label(const Dataset& ds);

struct SplitSpec {
    double trusted_fraction = 0.10;
    std::uint64_t seed = 2;
    std::optional<std::size_t> single_label_limit_per_class;  // nullopt: unlimited

    void validate() const;
};

struct GoldSilverSplit {
    Dataset gold;
    Dataset silver;
    std::vector<std::size_t> gold_indices;    // ascending, into the input
    std::vector<std::size_t> silver_indices;  // ascending, into the input
};

/// Uniform sampling without replacement of round(trusted_fraction * N) gold samples.
GoldSilverSplit split_gold_silver(const Dataset& ds, const SplitSpec& spec);

struct SingleLabelPool {
    Dataset pool;
    std::vector<std::size_t> empty_classes;  // classes with no single-label sample
};

/// Keeps at most `limit_per_class` samples per class after a seeded shuffle.
/// Selected samples keep their input order.
SingleLabelPool build_single_label_pool(const Dataset& singles, std::optional<std::size_t> limit_per_class,
                                        std::uint64_t seed);

/// Random train/test split used by the harness; test fraction in (0,1).
std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double test_fraction, std::uint64_t seed);

void write_dataset(const Dataset& ds, std::ostream& out);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
/// Throws ParseError naming the offending line.
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace mlnl
