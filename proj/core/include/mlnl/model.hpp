#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mlnl/dataset.hpp"
#include "mlnl/metrics.hpp"
#include "mlnl/numerics.hpp"

namespace mlnl {

enum class Activation { tanh, relu };

std::string to_string(Activation a);
Activation parse_activation(std::string_view text);

/// Feed-forward network d -> hidden... -> K with a linear output layer.
///
/// All parameters live in one flat vector; layer l stores its weight matrix
/// (out x in, row-major) followed by its bias.
class MlpModel {
public:
    MlpModel() = default;
    MlpModel(std::vector<std::size_t> layer_sizes, Activation activation);

    /// Gaussian weights with std `init_scale / sqrt(fan_in)`, zero biases.
    static MlpModel random(std::vector<std::size_t> layer_sizes, Activation activation, double init_scale,
                           RandomStream& rng);

    std::size_t input_dim() const { return sizes_.front(); }
    std::size_t output_dim() const { return sizes_.back(); }
    std::size_t layer_count() const { return sizes_.size() - 1; }
    const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
    Activation activation() const { return activation_; }

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }

    std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
    std::size_t bias_offset(std::size_t layer) const {
        return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
    }

    friend bool operator==(const MlpModel&, const MlpModel&) = default;

private:
    std::vector<std::size_t> sizes_;
    Activation activation_ = Activation::tanh;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

struct ForwardResult {
    std::vector<double> logits;
    std::vector<double> p_sig;
    std::vector<double> p_soft;
};

ForwardResult forward(const MlpModel& model, std::span<const double> x);
/// Logits for every row of `features`.
Matrix forward_logits(const MlpModel& model, const Matrix& features);
Matrix predict_sigmoid(const MlpModel& model, const Matrix& features);
Matrix predict_softmax(const MlpModel& model, const Matrix& features);

struct AslParams {
    double gamma_plus = 0.0;
    double gamma_minus = 4.0;
    double margin = 0.05;
    double clamp_eps = 1e-7;

    void validate() const;
};

/// -sum_k [ y_k (1-p)^g+ log p + (1-y_k) p_m^g- log(1-p_m) ], p_m = max(p - m, 0).
/// Probabilities are clamped to [eps, 1 - eps] first.
double asl_loss(std::span<const double> p, std::span<const std::uint8_t> y, const AslParams& params);

/// d asl_loss / d p at the clamped probabilities. Coordinates outside the
/// clamp window, and negatives with p <= m, get 0.
std::vector<double> asl_prob_grad(std::span<const double> p, std::span<const std::uint8_t> y, const AslParams& params);

/// Gradient of asl_loss(sigmoid(logits)) with respect to the logits.
std::vector<double> asl_grad(std::span<const double> logits, std::span<const std::uint8_t> y, const AslParams& params);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;  // w.r.t. logits
};

/// ASL evaluated on q = C^T sigmoid(logits), q clamped to [eps, 1 - eps].
LossGrad corrected_loss(const Matrix& c_hat, std::span<const double> logits, std::span<const std::uint8_t> y_noisy,
                        const AslParams& params);

/// Rows of `c` divided by their sums (rows summing to <= 0 are left unchanged).
Matrix normalize_rows(const Matrix& c);

struct PlainAsl {};

/// Gold samples (mask 1) use plain ASL, the rest use the corrected loss.
struct CorrectedAsl {
    Matrix correction;
    std::vector<std::uint8_t> gold_mask;
    bool normalize_rows = false;
};

using LossMode = std::variant<PlainAsl, CorrectedAsl>;

struct BatchGradient {
    double loss = 0.0;           // mean over the batch
    std::vector<double> grad;    // w.r.t. all parameters
};

BatchGradient batch_gradient(const MlpModel& model, const Dataset& data, std::span<const std::size_t> indices,
                             const LossMode& mode, const AslParams& params);
double batch_loss(const MlpModel& model, const Dataset& data, std::span<const std::size_t> indices,
                  const LossMode& mode, const AslParams& params);

enum class OptimizerKind { gradient_descent, adam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view text);

struct TrainConfig {
    std::size_t epochs = 40;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    double init_scale = 1.0;
    std::uint64_t seed = 4;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    std::optional<MetricsReport> eval;
};

struct TrainResult {
    MlpModel model;
    std::vector<EpochRecord> history;
};

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mini-batch training with a fresh seeded shuffle each epoch. The model after
/// the last epoch is returned. When `eval` is given, each epoch also records
/// its metrics on it.
TrainResult train(MlpModel model, const Dataset& data, const LossMode& mode, const TrainConfig& cfg,
                  const AslParams& params, const Dataset* eval = nullptr, double threshold = 0.5,
                  Cf1Mode cf1 = Cf1Mode::harmonic_of_macro);

MetricsReport evaluate(const MlpModel& model, const Dataset& data, double threshold = 0.5,
                       Cf1Mode mode = Cf1Mode::harmonic_of_macro);

/// Max relative error between analytic and central-difference gradients over
/// every parameter, on at most 32 samples of `indices`.
double gradient_check(const MlpModel& model, const Dataset& data, std::span<const std::size_t> indices,
                      const LossMode& mode, const AslParams& params, double h = 1e-5);

void write_model(const MlpModel& model, std::ostream& out);
void write_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel read_model(std::istream& in);
MlpModel read_model(const std::filesystem::path& path);

}  // namespace mlnl
