#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlnl/dataset.hpp"
#include "mlnl/estimator.hpp"
#include "mlnl/metrics.hpp"
#include "mlnl/model.hpp"

namespace mlnl {

enum class EstimatorMethod { galc_slr, glc, true_matrix, none };
enum class EstimationSet { gold, silver };

std::string to_string(EstimatorMethod m);
EstimatorMethod parse_estimator_method(std::string_view text);

struct ExperimentConfig {
    GenConfig data{.n = 12000, .d = 32, .k = 8, .mean_labels_per_sample = 2.9, .feature_noise_sigma = 1.25,
                   .imbalance_exponent = 1.5, .correlation_strength = 0.5};
    double test_fraction = 0.2;

    std::vector<double> etas{0.0, 0.2, 0.4, 0.6};
    bool noise_bernoulli = false;
    bool noise_retarget_freed = false;

    SplitSpec split;
    AslParams asl;

    std::vector<std::size_t> hidden{64};
    Activation activation = Activation::tanh;
    TrainConfig silver;
    TrainConfig gold;

    EstimatorMethod estimator = EstimatorMethod::galc_slr;
    EstimationSet estimation_set = EstimationSet::gold;
    bool final_sigmoid = true;
    Readout glc_readout = Readout::softmax;
    /// Divide correction-matrix rows by their sums before training the gold model.
    bool normalize_correction = true;

    double threshold = 0.5;
    Cf1Mode cf1_mode = Cf1Mode::harmonic_of_macro;

    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 1;

    void validate() const;
};

/// `key = value` lines, `#` comments, dotted keys. Unknown keys, malformed
/// values and out-of-range values throw ParseError with the line number.
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Every key with its effective value, in a fixed order; parses back to the same config.
std::string resolved_config(const ExperimentConfig& cfg);

}  // namespace mlnl
