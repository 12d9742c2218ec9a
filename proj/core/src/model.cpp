#include "mlnl/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mlnl/error.hpp"

namespace mlnl {

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

Activation parse_activation(std::string_view text) {
    if (text == "tanh") return Activation::tanh;
    if (text == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation '" + std::string(text) + "' (expected tanh|relu)");
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(std::string_view text) {
    if (text == "adam") return OptimizerKind::adam;
    if (text == "sgd") return OptimizerKind::gradient_descent;
    throw std::invalid_argument("unknown optimizer '" + std::string(text) + "' (expected sgd|adam)");
}

MlpModel::MlpModel(std::vector<std::size_t> layer_sizes, Activation activation)
    : sizes_(std::move(layer_sizes)), activation_(activation) {
    if (sizes_.size() < 2) throw std::invalid_argument("MlpModel: need at least input and output sizes");
    if (std::find(sizes_.begin(), sizes_.end(), std::size_t{0}) != sizes_.end()) {
        throw std::invalid_argument("MlpModel: layer sizes must be positive");
    }
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        offsets_.push_back(total);
        total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
    }
    params_.assign(total, 0.0);
}

MlpModel MlpModel::random(std::vector<std::size_t> layer_sizes, Activation activation, double init_scale,
                          RandomStream& rng) {
    MlpModel m(std::move(layer_sizes), activation);
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        const std::size_t fan_in = m.sizes_[l];
        const double scale = init_scale / std::sqrt(static_cast<double>(fan_in));
        const std::size_t count = fan_in * m.sizes_[l + 1];
        for (std::size_t i = 0; i < count; ++i) m.params_[m.offsets_[l] + i] = scale * rng.normal();
    }
    return m;
}

namespace {

double activate(Activation a, double z) { return a == Activation::tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0); }

// Derivative expressed through the activation output h.
double activate_grad(Activation a, double h) { return a == Activation::tanh ? 1.0 - h * h : (h > 0.0 ? 1.0 : 0.0); }

// Per-layer outputs for a single sample; buffers are reused across samples.
struct Workspace {
    std::vector<std::vector<double>> outputs;  // outputs[0] = input copy, outputs[L] = logits
    std::vector<std::vector<double>> deltas;

    explicit Workspace(const MlpModel& m) {
        const auto& sizes = m.layer_sizes();
        outputs.resize(sizes.size());
        deltas.resize(sizes.size());
        for (std::size_t l = 0; l < sizes.size(); ++l) {
            outputs[l].resize(sizes[l]);
            deltas[l].resize(sizes[l]);
        }
    }
};

void forward_into(const MlpModel& m, std::span<const double> x, Workspace& ws) {
    if (x.size() != m.input_dim()) {
        throw std::invalid_argument("forward: expected " + std::to_string(m.input_dim()) + " features, got " +
                                    std::to_string(x.size()));
    }
    std::copy(x.begin(), x.end(), ws.outputs[0].begin());
    const auto& sizes = m.layer_sizes();
    const auto params = m.parameters();
    const std::size_t L = m.layer_count();
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t in = sizes[l], out = sizes[l + 1];
        const double* W = params.data() + m.weight_offset(l);
        const double* b = params.data() + m.bias_offset(l);
        const auto& a = ws.outputs[l];
        auto& z = ws.outputs[l + 1];
        for (std::size_t o = 0; o < out; ++o) {
            double acc = b[o];
            const double* w = W + o * in;
            for (std::size_t i = 0; i < in; ++i) acc += w[i] * a[i];
            z[o] = (l + 1 == L) ? acc : activate(m.activation(), acc);
        }
    }
}

// Accumulates d loss / d params given d loss / d logits already in ws.deltas[L].
void backward_into(const MlpModel& m, Workspace& ws, std::span<double> grad, double weight) {
    const auto& sizes = m.layer_sizes();
    const auto params = m.parameters();
    for (std::size_t l = m.layer_count(); l-- > 0;) {
        const std::size_t in = sizes[l], out = sizes[l + 1];
        const double* W = params.data() + m.weight_offset(l);
        double* gW = grad.data() + m.weight_offset(l);
        double* gb = grad.data() + m.bias_offset(l);
        const auto& a = ws.outputs[l];
        const auto& dz = ws.deltas[l + 1];
        for (std::size_t o = 0; o < out; ++o) {
            const double d = weight * dz[o];
            gb[o] += d;
            double* gw = gW + o * in;
            for (std::size_t i = 0; i < in; ++i) gw[i] += d * a[i];
        }
        if (l == 0) break;
        auto& da = ws.deltas[l];
        std::fill(da.begin(), da.end(), 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            const double* w = W + o * in;
            for (std::size_t i = 0; i < in; ++i) da[i] += w[i] * dz[o];
        }
        for (std::size_t i = 0; i < in; ++i) da[i] *= activate_grad(m.activation(), a[i]);
    }
}

}  // namespace

ForwardResult forward(const MlpModel& model, std::span<const double> x) {
    Workspace ws(model);
    forward_into(model, x, ws);
    ForwardResult r;
    r.logits = ws.outputs.back();
    r.p_sig.resize(r.logits.size());
    for (std::size_t k = 0; k < r.logits.size(); ++k) r.p_sig[k] = sigmoid(r.logits[k]);
    r.p_soft = softmax(r.logits);
    return r;
}

Matrix forward_logits(const MlpModel& model, const Matrix& features) {
    Workspace ws(model);
    Matrix out(features.rows(), model.output_dim());
    for (std::size_t i = 0; i < features.rows(); ++i) {
        forward_into(model, features.row(i), ws);
        std::copy(ws.outputs.back().begin(), ws.outputs.back().end(), out.row(i).begin());
    }
    return out;
}

Matrix predict_sigmoid(const MlpModel& model, const Matrix& features) {
    Matrix out = forward_logits(model, features);
    for (double& v : out.data()) v = sigmoid(v);
    return out;
}

Matrix predict_softmax(const MlpModel& model, const Matrix& features) {
    Matrix out = forward_logits(model, features);
    for (std::size_t i = 0; i < out.rows(); ++i) softmax_into(out.row(i), out.row(i));
    return out;
}

void AslParams::validate() const {
    if (!(gamma_plus >= 0.0) || !(gamma_minus >= 0.0)) throw std::invalid_argument("AslParams: gammas must be >= 0");
    if (!(margin >= 0.0 && margin < 1.0)) throw std::invalid_argument("AslParams: margin must lie in [0,1)");
    if (!(clamp_eps > 0.0 && clamp_eps <= 1e-3)) throw std::invalid_argument("AslParams: clamp_eps must lie in (0,1e-3]");
}

namespace {

double clamp_prob(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

// pow that keeps 0^0 = 1 and treats exponent 0 as constant 1.
double focus(double base, double gamma) { return gamma == 0.0 ? 1.0 : std::pow(base, gamma); }

double positive_term(double p, double gamma) { return focus(1.0 - p, gamma) * std::log(p); }

double negative_term(double p, double margin, double gamma, double eps) {
    const double pm = std::min(std::max(p - margin, 0.0), 1.0 - eps);
    if (pm == 0.0) return 0.0;
    return focus(pm, gamma) * std::log1p(-pm);
}

// d(-L+)/dp
double positive_slope(double p, double gamma) {
    double g = -focus(1.0 - p, gamma) / p;
    if (gamma != 0.0) g += gamma * std::pow(1.0 - p, gamma - 1.0) * std::log(p);
    return g;
}

// d(-L-)/dp; zero on the flat side of the margin (including p == m).
double negative_slope(double p, double margin, double gamma, double eps) {
    const double shifted = p - margin;
    if (shifted <= 0.0) return 0.0;
    if (shifted > 1.0 - eps) return 0.0;
    const double pm = shifted;
    double g = focus(pm, gamma) / (1.0 - pm);
    if (gamma != 0.0) g -= gamma * std::pow(pm, gamma - 1.0) * std::log1p(-pm);
    return g;
}

}  // namespace

double asl_loss(std::span<const double> p, std::span<const std::uint8_t> y, const AslParams& params) {
    if (p.size() != y.size()) throw std::invalid_argument("asl_loss: size mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double pk = clamp_prob(p[k], params.clamp_eps);
        total += y[k] ? positive_term(pk, params.gamma_plus)
                      : negative_term(pk, params.margin, params.gamma_minus, params.clamp_eps);
    }
    return -total;
}

std::vector<double> asl_prob_grad(std::span<const double> p, std::span<const std::uint8_t> y, const AslParams& params) {
    if (p.size() != y.size()) throw std::invalid_argument("asl_prob_grad: size mismatch");
    std::vector<double> g(p.size(), 0.0);
    const double lo = params.clamp_eps, hi = 1.0 - params.clamp_eps;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] < lo || p[k] > hi) continue;
        g[k] = y[k] ? positive_slope(p[k], params.gamma_plus)
                    : negative_slope(p[k], params.margin, params.gamma_minus, params.clamp_eps);
    }
    return g;
}

std::vector<double> asl_grad(std::span<const double> logits, std::span<const std::uint8_t> y, const AslParams& params) {
    std::vector<double> p(logits.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = sigmoid(logits[k]);
    std::vector<double> g = asl_prob_grad(p, y, params);
    for (std::size_t k = 0; k < p.size(); ++k) g[k] *= p[k] * (1.0 - p[k]);
    return g;
}

LossGrad corrected_loss(const Matrix& c_hat, std::span<const double> logits, std::span<const std::uint8_t> y_noisy,
                        const AslParams& params) {
    const std::size_t K = logits.size();
    if (c_hat.rows() != K || c_hat.cols() != K) throw std::invalid_argument("corrected_loss: matrix must be K x K");
    std::vector<double> p(K), q(K, 0.0);
    for (std::size_t i = 0; i < K; ++i) p[i] = sigmoid(logits[i]);
    for (std::size_t j = 0; j < K; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < K; ++i) acc += c_hat(i, j) * p[i];
        q[j] = acc;
    }
    LossGrad out;
    out.loss = asl_loss(q, y_noisy, params);
    const std::vector<double> dq = asl_prob_grad(q, y_noisy, params);
    out.grad.assign(K, 0.0);
    for (std::size_t i = 0; i < K; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < K; ++j) acc += c_hat(i, j) * dq[j];
        out.grad[i] = acc * (p[i] * (1.0 - p[i]));
    }
    return out;
}

Matrix normalize_rows(const Matrix& c) {
    Matrix out = c;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const double total = sum(out.row(i));
        if (total > 0.0) {
            for (double& v : out.row(i)) v /= total;
        }
    }
    return out;
}

namespace {

// Resolves the effective correction matrix once per call site.
struct ResolvedMode {
    const CorrectedAsl* corrected = nullptr;
    Matrix normalized;

    const Matrix& matrix() const { return corrected->normalize_rows ? normalized : corrected->correction; }

    explicit ResolvedMode(const LossMode& mode, const Dataset& data) {
        if (auto* c = std::get_if<CorrectedAsl>(&mode)) {
            corrected = c;
            if (c->gold_mask.size() != data.size()) {
                throw std::invalid_argument("CorrectedAsl: gold mask length must equal dataset size");
            }
            if (c->correction.rows() != data.class_count || c->correction.cols() != data.class_count) {
                throw std::invalid_argument("CorrectedAsl: correction matrix must be K x K");
            }
            if (c->normalize_rows) normalized = normalize_rows(c->correction);
        }
    }

    bool plain_for(std::size_t i) const { return corrected == nullptr || corrected->gold_mask[i] != 0; }
};

// Loss for one sample; writes d loss / d logits into dlogits when non-null.
double sample_loss(const ResolvedMode& mode, std::size_t i, std::span<const double> logits,
                   std::span<const std::uint8_t> y, const AslParams& params, std::vector<double>* dlogits) {
    if (mode.plain_for(i)) {
        std::vector<double> p(logits.size());
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = sigmoid(logits[k]);
        if (dlogits) *dlogits = asl_grad(logits, y, params);
        return asl_loss(p, y, params);
    }
    LossGrad lg = corrected_loss(mode.matrix(), logits, y, params);
    if (dlogits) *dlogits = std::move(lg.grad);
    return lg.loss;
}

}  // namespace

BatchGradient batch_gradient(const MlpModel& model, const Dataset& data, std::span<const std::size_t> indices,
                             const LossMode& mode, const AslParams& params) {
    if (data.class_count != model.output_dim() || data.dim() != model.input_dim()) {
        throw std::invalid_argument("batch_gradient: dataset shape does not match model");
    }
    ResolvedMode resolved(mode, data);
    Workspace ws(model);
    BatchGradient out;
    out.grad.assign(model.parameters().size(), 0.0);
    if (indices.empty()) return out;
    const double weight = 1.0 / static_cast<double>(indices.size());
    std::vector<double> dlogits;
    for (std::size_t i : indices) {
        forward_into(model, data.x(i), ws);
        auto& logits = ws.outputs.back();
        out.loss += sample_loss(resolved, i, logits, data.y(i), params, &dlogits);
        std::copy(dlogits.begin(), dlogits.end(), ws.deltas.back().begin());
        backward_into(model, ws, out.grad, weight);
    }
    out.loss *= weight;
    return out;
}

double batch_loss(const MlpModel& model, const Dataset& data, std::span<const std::size_t> indices,
                  const LossMode& mode, const AslParams& params) {
    ResolvedMode resolved(mode, data);
    Workspace ws(model);
    if (indices.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i : indices) {
        forward_into(model, data.x(i), ws);
        total += sample_loss(resolved, i, ws.outputs.back(), data.y(i), params, nullptr);
    }
    return total / static_cast<double>(indices.size());
}

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be >= 0");
}

MetricsReport evaluate(const MlpModel& model, const Dataset& data, double threshold, Cf1Mode mode) {
    const Matrix probs = predict_sigmoid(model, data.features);
    return compute_metrics(probs, data.labels, threshold, mode);
}

TrainResult train(MlpModel model, const Dataset& data, const LossMode& mode, const TrainConfig& cfg,
                  const AslParams& params, const Dataset* eval, double threshold, Cf1Mode cf1) {
    cfg.validate();
    params.validate();
    if (data.empty()) throw std::invalid_argument("train: empty dataset");

    const std::size_t P = model.parameters().size();
    std::vector<double> m1(P, 0.0), m2(P, 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    std::size_t step = 0;

    RandomStream shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
            const std::size_t stop = std::min(start + cfg.batch_size, order.size());
            std::span<const std::size_t> batch(order.data() + start, stop - start);
            BatchGradient bg = batch_gradient(model, data, batch, mode, params);
            if (!std::isfinite(bg.loss)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batch_no));
            }
            epoch_loss += bg.loss * static_cast<double>(batch.size());

            auto theta = model.parameters();
            ++step;
            if (cfg.optimizer == OptimizerKind::gradient_descent) {
                for (std::size_t j = 0; j < P; ++j) theta[j] -= cfg.learning_rate * bg.grad[j];
            } else {
                const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                for (std::size_t j = 0; j < P; ++j) {
                    m1[j] = beta1 * m1[j] + (1.0 - beta1) * bg.grad[j];
                    m2[j] = beta2 * m2[j] + (1.0 - beta2) * bg.grad[j] * bg.grad[j];
                    const double mhat = m1[j] / c1;
                    const double vhat = m2[j] / c2;
                    theta[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + adam_eps);
                }
            }
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss / static_cast<double>(data.size());
        if (eval) rec.eval = evaluate(model, *eval, threshold, cf1);
        result.history.push_back(std::move(rec));
    }
    result.model = std::move(model);
    return result;
}

double gradient_check(const MlpModel& model, const Dataset& data, std::span<const std::size_t> indices,
                      const LossMode& mode, const AslParams& params, double h) {
    if (indices.size() > 32) indices = indices.first(32);
    const BatchGradient analytic = batch_gradient(model, data, indices, mode, params);
    MlpModel probe = model;
    auto theta = probe.parameters();
    double worst = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double saved = theta[j];
        theta[j] = saved + h;
        const double up = batch_loss(probe, data, indices, mode, params);
        theta[j] = saved - h;
        const double down = batch_loss(probe, data, indices, mode, params);
        theta[j] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic.grad[j];
        const double scale = std::max({std::abs(a), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(a - numeric) / scale);
    }
    return worst;
}

void write_model(const MlpModel& model, std::ostream& out) {
    out << "MLPM v1";
    for (std::size_t s : model.layer_sizes()) out << ' ' << s;
    out << ' ' << to_string(model.activation()) << '\n';
    const auto& sizes = model.layer_sizes();
    const auto params = model.parameters();
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        const std::size_t in = sizes[l], outn = sizes[l + 1];
        for (std::size_t o = 0; o < outn; ++o) {
            for (std::size_t i = 0; i < in; ++i) {
                if (i) out << ' ';
                out << format_double(params[model.weight_offset(l) + o * in + i]);
            }
            out << '\n';
        }
        for (std::size_t o = 0; o < outn; ++o) {
            if (o) out << ' ';
            out << format_double(params[model.bias_offset(l) + o]);
        }
        out << '\n';
    }
}

void write_model(const MlpModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_model(model, out);
}

MlpModel read_model(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError(1, "missing model header");
    ++line_no;
    std::istringstream header(line);
    std::string magic, version;
    header >> magic >> version;
    if (magic != "MLPM" || version != "v1") throw ParseError(line_no, "expected 'MLPM v1' header");
    std::vector<std::string> rest;
    for (std::string tok; header >> tok;) rest.push_back(tok);
    if (rest.size() < 3) throw ParseError(line_no, "header needs at least <d> <K> <activation>");
    Activation act;
    try {
        act = parse_activation(rest.back());
    } catch (const std::invalid_argument& e) {
        throw ParseError(line_no, e.what());
    }
    rest.pop_back();
    std::vector<std::size_t> sizes;
    for (const auto& tok : rest) {
        double v = 0.0;
        if (!parse_double(tok, v) || v < 1.0 || v != std::floor(v)) throw ParseError(line_no, "bad layer size '" + tok + "'");
        sizes.push_back(static_cast<std::size_t>(v));
    }
    MlpModel model(sizes, act);
    auto params = model.parameters();

    auto read_row = [&](double* dst, std::size_t count) {
        if (!std::getline(in, line)) throw ParseError(line_no + 1, "unexpected end of model file");
        ++line_no;
        std::istringstream row(line);
        std::size_t got = 0;
        for (std::string tok; row >> tok;) {
            if (got == count) throw ParseError(line_no, "too many values on row");
            if (!parse_double(tok, dst[got])) throw ParseError(line_no, "bad parameter value '" + tok + "'");
            ++got;
        }
        if (got != count) throw ParseError(line_no, "expected " + std::to_string(count) + " values");
    };
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        const std::size_t inn = sizes[l], outn = sizes[l + 1];
        for (std::size_t o = 0; o < outn; ++o) read_row(params.data() + model.weight_offset(l) + o * inn, inn);
        read_row(params.data() + model.bias_offset(l), outn);
    }
    return model;
}

MlpModel read_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_model(in);
}

}  // namespace mlnl
