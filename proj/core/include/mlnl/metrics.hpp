#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mlnl/numerics.hpp"

namespace mlnl {

enum class Cf1Mode {
    /// Harmonic mean of macro-averaged precision and recall.
    harmonic_of_macro,
    /// Plain mean of per-class F1 values.
    mean_of_class_f1,
};

struct MetricsReport {
    double map = 0.0;
    double cf1 = 0.0;
    double of1 = 0.0;
    std::vector<double> per_class_ap;           // NaN for classes without positives
    std::vector<std::size_t> excluded_classes;  // classes without positives
    double threshold = 0.5;
};

/// Non-interpolated AP. Ties in score rank the lower original index first.
/// Requires at least one relevant item.
double average_precision(std::span<const double> scores, std::span<const std::uint8_t> relevance);

struct MeanAp {
    double map = 0.0;
    std::vector<double> per_class;
    std::vector<std::size_t> excluded_classes;
};

/// `labels` is row-major N x K, matching `scores`.
MeanAp mean_ap(const Matrix& scores, std::span<const std::uint8_t> labels);

struct F1Scores {
    double cf1 = 0.0;
    double of1 = 0.0;
};

F1Scores f1_scores(const Matrix& probs, std::span<const std::uint8_t> labels, double threshold,
                   Cf1Mode mode = Cf1Mode::harmonic_of_macro);

MetricsReport compute_metrics(const Matrix& probs, std::span<const std::uint8_t> labels, double threshold = 0.5,
                              Cf1Mode mode = Cf1Mode::harmonic_of_macro);

}  // namespace mlnl
