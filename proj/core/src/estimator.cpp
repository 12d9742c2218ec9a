#include "mlnl/estimator.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace mlnl {

RegulatorMatrix compute_regulators(const MlpModel& f, const Dataset& single_label_pool) {
    if (single_label_pool.empty()) throw std::invalid_argument("compute_regulators: single-label pool is empty");
    const std::size_t K = single_label_pool.class_count;
    if (K != f.output_dim()) throw std::invalid_argument("compute_regulators: class count does not match model");

    const Matrix soft = predict_softmax(f, single_label_pool.features);
    RegulatorMatrix out;
    out.reg = Matrix(K, K, 0.0);
    out.counts.assign(K, 0);
    for (std::size_t i = 0; i < single_label_pool.size(); ++i) {
        auto y = single_label_pool.y(i);
        for (std::size_t k = 0; k < K; ++k) {
            if (!y[k]) continue;
            ++out.counts[k];
            auto row = out.reg.row(k);
            auto s = soft.row(i);
            for (std::size_t j = 0; j < K; ++j) row[j] += s[j];
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        auto row = out.reg.row(k);
        if (out.counts[k] == 0) {
            for (double& v : row) v = 1.0 / static_cast<double>(K);
            out.fallback_classes.push_back(k);
            continue;
        }
        for (double& v : row) v /= static_cast<double>(out.counts[k]);
    }
    return out;
}

namespace {

EstimationReport finish(Matrix raw, std::vector<std::size_t> counts, std::vector<std::size_t> fallback) {
    EstimationReport rep;
    Matrix scaled = raw;
    for (double& v : scaled.data()) v = sigmoid(v);
    rep.raw = {std::move(raw), MatrixKind::estimated_raw};
    rep.scaled = {std::move(scaled), MatrixKind::estimated_scaled};
    rep.counts = std::move(counts);
    rep.fallback_classes = std::move(fallback);
    return rep;
}

}  // namespace

EstimationReport estimate_galc_slr(const MlpModel& f, const Dataset& estimation_set, const RegulatorMatrix& reg) {
    if (estimation_set.empty()) throw std::invalid_argument("estimate_galc_slr: estimation set is empty");
    const std::size_t K = estimation_set.class_count;
    if (K != f.output_dim() || reg.reg.rows() != K) {
        throw std::invalid_argument("estimate_galc_slr: class count mismatch");
    }

    const Matrix sig = predict_sigmoid(f, estimation_set.features);
    Matrix c_hat(K, K, 0.0);
    std::vector<std::size_t> counts(K, 0);
    std::vector<double> regulators(K);
    for (std::size_t k = 0; k < K; ++k) {
        auto row = c_hat.row(k);
        for (std::size_t i = 0; i < estimation_set.size(); ++i) {
            auto y = estimation_set.y(i);
            if (!y[k]) continue;
            ++counts[k];
            std::size_t other_labels = 0;
            std::fill(regulators.begin(), regulators.end(), 0.0);
            for (std::size_t p = 0; p < K; ++p) {
                if (p == k || !y[p]) continue;
                ++other_labels;
                auto rp = reg.reg.row(p);
                for (std::size_t j = 0; j < K; ++j) regulators[j] += rp[j];
            }
            auto s = sig.row(i);
            for (std::size_t j = 0; j < K; ++j) row[j] += s[j] - regulators[j];
            auto rk = reg.reg.row(k);
            const auto n_other = static_cast<double>(other_labels);
            for (std::size_t j = 0; j < K; ++j) row[j] += rk[j] * n_other;
        }
    }

    std::vector<std::size_t> fallback;
    const double uniform_logit = logit(1.0 / static_cast<double>(K));
    for (std::size_t k = 0; k < K; ++k) {
        auto row = c_hat.row(k);
        if (counts[k] == 0) {
            for (double& v : row) v = uniform_logit;
            fallback.push_back(k);
            continue;
        }
        for (double& v : row) v /= static_cast<double>(counts[k]);
    }
    return finish(std::move(c_hat), std::move(counts), std::move(fallback));
}

EstimationReport estimate_glc(const MlpModel& f, const Dataset& gold, Readout readout) {
    if (gold.empty()) throw std::invalid_argument("estimate_glc: gold set is empty");
    const std::size_t K = gold.class_count;
    if (K != f.output_dim()) throw std::invalid_argument("estimate_glc: class count does not match model");

    const Matrix pred = readout == Readout::softmax ? predict_softmax(f, gold.features) : predict_sigmoid(f, gold.features);
    Matrix c_hat(K, K, 0.0);
    std::vector<std::size_t> counts(K, 0);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        auto y = gold.y(i);
        auto s = pred.row(i);
        for (std::size_t k = 0; k < K; ++k) {
            if (!y[k]) continue;
            ++counts[k];
            auto row = c_hat.row(k);
            for (std::size_t j = 0; j < K; ++j) row[j] += s[j];
        }
    }
    std::vector<std::size_t> fallback;
    for (std::size_t k = 0; k < K; ++k) {
        auto row = c_hat.row(k);
        if (counts[k] == 0) {
            for (double& v : row) v = 1.0 / static_cast<double>(K);
            fallback.push_back(k);
            continue;
        }
        for (double& v : row) v /= static_cast<double>(counts[k]);
    }
    return finish(std::move(c_hat), std::move(counts), std::move(fallback));
}

MatrixComparison compare_matrices(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols() || a.empty()) {
        throw std::invalid_argument("compare_matrices: matrices must be square with the same shape");
    }
    const std::size_t K = a.rows();
    MatrixComparison out;
    double sq = 0.0, diag = 0.0, off = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = 0; j < K; ++j) {
            const double d = a(i, j) - b(i, j);
            sq += d * d;
            (i == j ? diag : off) += a(i, j);
        }
    }
    out.frobenius_distance = std::sqrt(sq);
    out.mean_diagonal = diag / static_cast<double>(K);
    out.mean_offdiagonal = K > 1 ? off / static_cast<double>(K * (K - 1)) : 0.0;
    out.diagonal_gap = out.mean_diagonal - out.mean_offdiagonal;
    return out;
}

void write_estimation_sidecar(const EstimationReport& report, std::ostream& out) {
    out << "counts";
    for (std::size_t c : report.counts) out << ' ' << c;
    out << "\nfallback_classes";
    for (std::size_t c : report.fallback_classes) out << ' ' << c;
    out << '\n';
}

void write_estimation_sidecar(const EstimationReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_estimation_sidecar(report, out);
}

}  // namespace mlnl
