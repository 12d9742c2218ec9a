#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mlnl/dataset.hpp"
#include "mlnl/numerics.hpp"

namespace mlnl {

enum class MatrixKind { true_row_stochastic, estimated_raw, estimated_scaled };

std::string to_string(MatrixKind kind);

/// K x K label-flip table; entry (i, j) is the chance a true label i ends up as j.
struct CorruptionMatrix {
    Matrix values;
    MatrixKind kind = MatrixKind::true_row_stochastic;

    std::size_t classes() const { return values.rows(); }
};

struct NoiseSpec {
    double eta = 0.0;
    std::uint64_t seed = 3;
    /// Flip each positive independently with probability eta instead of an exact global count.
    bool per_sample_bernoulli = false;
    /// Let a flip land on a label the same sample lost to an earlier flip.
    /// Off by default: such flip-backs cancel the earlier flip and push the
    /// realized diagonal above 1 - eta.
    bool retarget_freed_labels = false;

    void validate() const;
};

struct Flip {
    std::size_t sample;
    std::size_t from;
    std::size_t to;

    friend bool operator==(const Flip&, const Flip&) = default;
};

using FlipLog = std::vector<Flip>;

/// C_ii = 1 - eta, C_ij = eta / (K - 1), rounded to a 2^-52 grid so rows sum to exactly 1.
CorruptionMatrix symmetric_matrix(std::size_t K, double eta);

struct Injection {
    Dataset noisy;
    FlipLog log;
};

/// Symmetric label noise with rejection resampling of the target label.
///
/// round(eta * P) of the P positive (sample, label) pairs are chosen without
/// replacement and applied in sample order. Each flip clears its label and sets
/// a uniformly drawn label that is negative at that moment and was not one of
/// the sample's clean labels. When no such label is left the second condition
/// is dropped.
Injection inject(const Dataset& clean, const NoiseSpec& spec);

struct EmpiricalCorruption {
    CorruptionMatrix matrix;
    std::vector<std::size_t> empty_rows;  // classes with no clean positive; row set one-hot
};

/// Counts, per clean positive of label i, whether it survived or moved.
/// A lost label spreads its unit mass evenly over the labels gained by the
/// same sample, so multiple flips within one sample stay row-normalized.
EmpiricalCorruption empirical_matrix(const Dataset& clean, const Dataset& noisy);

void write_matrix_csv(const CorruptionMatrix& m, std::ostream& out, double eta = -1.0);
void write_matrix_csv(const CorruptionMatrix& m, const std::filesystem::path& path, double eta = -1.0);
CorruptionMatrix read_matrix_csv(std::istream& in);
CorruptionMatrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace mlnl
