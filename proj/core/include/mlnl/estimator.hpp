#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "mlnl/dataset.hpp"
#include "mlnl/model.hpp"
#include "mlnl/noise.hpp"

namespace mlnl {

/// Row k: mean softmax output of the silver model over single-label samples of class k.
struct RegulatorMatrix {
    Matrix reg;
    std::vector<std::size_t> counts;
    std::vector<std::size_t> fallback_classes;  // no samples; row is uniform 1/K
};

struct EstimationReport {
    CorruptionMatrix raw;     // before the final sigmoid
    CorruptionMatrix scaled;  // sigmoid(raw), elementwise
    std::vector<std::size_t> counts;
    std::vector<std::size_t> fallback_classes;
};

RegulatorMatrix compute_regulators(const MlpModel& f, const Dataset& single_label_pool);

/// Multi-label corruption estimate with single-label regulators.
///
/// For every class k and every sample carrying label k, accumulate
///   f_sig(x) - sum_{p != k, y_p = 1} Reg_p + (#other positives) * Reg_k
/// then divide by the number of such samples. Classes without samples get
/// the raw row logit(1/K) so that the scaled row is uniform.
EstimationReport estimate_galc_slr(const MlpModel& f, const Dataset& estimation_set, const RegulatorMatrix& reg);

enum class Readout { softmax, sigmoid };

/// Gold-loss-correction baseline: row k is the mean readout over samples with label k.
EstimationReport estimate_glc(const MlpModel& f, const Dataset& gold, Readout readout = Readout::softmax);

struct MatrixComparison {
    double frobenius_distance = 0.0;  // ||A - B||_F
    double mean_diagonal = 0.0;       // of A
    double mean_offdiagonal = 0.0;    // of A
    double diagonal_gap = 0.0;        // mean_diagonal - mean_offdiagonal
};

MatrixComparison compare_matrices(const Matrix& a, const Matrix& b);

/// Per-class counts and fallback list, one `key value...` line each.
void write_estimation_sidecar(const EstimationReport& report, std::ostream& out);
void write_estimation_sidecar(const EstimationReport& report, const std::filesystem::path& path);

}  // namespace mlnl
