#include "mlnl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mlnl {

double average_precision(std::span<const double> scores, std::span<const std::uint8_t> relevance) {
    if (scores.size() != relevance.size()) throw std::invalid_argument("average_precision: size mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::size_t hits = 0;
    double precision_sum = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (relevance[order[rank]]) {
            ++hits;
            precision_sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    if (hits == 0) throw std::invalid_argument("average_precision: no relevant items");
    return precision_sum / static_cast<double>(hits);
}

MeanAp mean_ap(const Matrix& scores, std::span<const std::uint8_t> labels) {
    const std::size_t n = scores.rows();
    const std::size_t K = scores.cols();
    if (labels.size() != n * K) throw std::invalid_argument("mean_ap: label matrix shape mismatch");

    MeanAp out;
    out.per_class.assign(K, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> column(n);
    std::vector<std::uint8_t> relevant(n);
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < K; ++k) {
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = scores(i, k);
            relevant[i] = labels[i * K + k];
            any = any || relevant[i];
        }
        if (!any) {
            out.excluded_classes.push_back(k);
            continue;
        }
        out.per_class[k] = average_precision(column, relevant);
        total += out.per_class[k];
        ++used;
    }
    if (used == 0) throw std::invalid_argument("mean_ap: no class has a positive label");
    out.map = total / static_cast<double>(used);
    return out;
}

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double harmonic(double a, double b) { return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

}  // namespace

F1Scores f1_scores(const Matrix& probs, std::span<const std::uint8_t> labels, double threshold, Cf1Mode mode) {
    const std::size_t n = probs.rows();
    const std::size_t K = probs.cols();
    if (labels.size() != n * K) throw std::invalid_argument("f1_scores: label matrix shape mismatch");
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("f1_scores: threshold must lie in (0,1)");

    std::vector<std::size_t> tp(K, 0), fp(K, 0), fn(K, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
            const bool predicted = probs(i, k) >= threshold;
            const bool actual = labels[i * K + k] != 0;
            if (predicted && actual) ++tp[k];
            else if (predicted) ++fp[k];
            else if (actual) ++fn[k];
        }
    }

    double precision_sum = 0.0, recall_sum = 0.0, f1_sum = 0.0;
    std::size_t tp_all = 0, fp_all = 0, fn_all = 0;
    for (std::size_t k = 0; k < K; ++k) {
        const double p = ratio(static_cast<double>(tp[k]), static_cast<double>(tp[k] + fp[k]));
        const double r = ratio(static_cast<double>(tp[k]), static_cast<double>(tp[k] + fn[k]));
        precision_sum += p;
        recall_sum += r;
        f1_sum += harmonic(p, r);
        tp_all += tp[k];
        fp_all += fp[k];
        fn_all += fn[k];
    }

    F1Scores out;
    const double Kd = static_cast<double>(K);
    out.cf1 = mode == Cf1Mode::harmonic_of_macro ? harmonic(precision_sum / Kd, recall_sum / Kd) : f1_sum / Kd;
    const double op = ratio(static_cast<double>(tp_all), static_cast<double>(tp_all + fp_all));
    const double orc = ratio(static_cast<double>(tp_all), static_cast<double>(tp_all + fn_all));
    out.of1 = harmonic(op, orc);
    return out;
}

MetricsReport compute_metrics(const Matrix& probs, std::span<const std::uint8_t> labels, double threshold, Cf1Mode mode) {
    MetricsReport report;
    auto ap = mean_ap(probs, labels);
    auto f1 = f1_scores(probs, labels, threshold, mode);
    report.map = ap.map;
    report.per_class_ap = std::move(ap.per_class);
    report.excluded_classes = std::move(ap.excluded_classes);
    report.cf1 = f1.cf1;
    report.of1 = f1.of1;
    report.threshold = threshold;
    return report;
}

}  // namespace mlnl
