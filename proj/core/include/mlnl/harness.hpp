#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mlnl/config.hpp"
#include "mlnl/dataset.hpp"
#include "mlnl/estimator.hpp"
#include "mlnl/metrics.hpp"
#include "mlnl/model.hpp"
#include "mlnl/noise.hpp"

namespace mlnl {

/// Sub-seeds drawn from labeled children of the master stream.
struct SeedPlan {
    std::uint64_t datagen = 0;
    std::uint64_t test_split = 0;
    std::uint64_t split = 0;
    std::uint64_t pool = 0;
    std::uint64_t noise = 0;
    std::uint64_t init_silver = 0;
    std::uint64_t init_gold = 0;
    std::uint64_t shuffle_silver = 0;
    std::uint64_t shuffle_gold = 0;
};

SeedPlan plan_seeds(std::uint64_t master);

/// Everything the training stages consume, before any model is fit.
struct PreparedData {
    Dataset test;          // clean, single-label samples removed
    Dataset singles;       // single-label training samples (source of the regulator pool)
    Dataset gold;          // trusted, clean
    Dataset silver_clean;  // untrusted, before injection
    Dataset silver;        // untrusted, noisy
    FlipLog flips;
};

PreparedData prepare_data(const ExperimentConfig& cfg, double eta);

struct MaskedDataset {
    Dataset data;
    std::vector<std::uint8_t> gold_mask;
};

/// Gold rows first, then silver rows; the mask marks the gold ones.
MaskedDataset combine_gold_silver(const Dataset& gold, const Dataset& silver);

struct StageTiming {
    std::string name;
    double seconds = 0.0;
};

struct RunRecord {
    std::string label;  // e.g. "galc_slr" or "L10"
    EstimatorMethod method = EstimatorMethod::none;
    double eta = 0.0;
    std::string config_hash;  // fnv1a64 of the resolved config, hex
    std::vector<StageTiming> stages;
    std::vector<EpochRecord> silver_history;
    std::vector<EpochRecord> gold_history;
    MetricsReport final_metrics;
    std::optional<EstimationReport> estimate;
    std::optional<Matrix> correction;  // what the gold stage used; empty for `none`
    std::optional<double> frobenius_to_true;
    bool used_single_label_pool = false;
    double wall_seconds = 0.0;
    std::string error;  // set when a sweep run failed
};

struct StageError : std::runtime_error {
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error("stage " + stage + ": " + what), stage_name(stage) {}
    std::string stage_name;
};

/// Silver train, estimate, gold train, evaluate. Artifacts go to `out_dir`
/// when it is given. Failures are rethrown as StageError.
RunRecord run_pipeline(const ExperimentConfig& cfg, double eta,
                       const std::optional<std::filesystem::path>& out_dir = std::nullopt);

struct SweepResult {
    std::vector<RunRecord> runs;
    std::string summary_csv;
};

/// Every eta in cfg.etas times {none, galc_slr, true_matrix}; writes
/// summary.csv, per-run subdirectories and SVG plots under cfg.out_dir.
SweepResult run_sweep(const ExperimentConfig& cfg, bool write_run_artifacts = true);

enum class AblationAxis { trusted_fraction, single_label_limit };

std::string to_string(AblationAxis axis);
AblationAxis parse_ablation_axis(std::string_view text);

SweepResult run_ablation(const ExperimentConfig& cfg, AblationAxis axis, double eta = 0.4);

/// `method,eta,map,cf1,of1,frobenius_to_true` with fixed six-digit precision.
std::string summary_table(const std::vector<RunRecord>& runs);

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mlnl
