#pragma once

// Quadratic-time reference implementations used to cross-check the metrics.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "mlnl/numerics.hpp"

namespace oracle {

// Item j outranks i when its score is higher, or equal with a lower index.
inline bool outranks(const std::vector<double>& s, std::size_t j, std::size_t i) {
    return s[j] > s[i] || (s[j] == s[i] && j < i);
}

// Mean over relevant items of (relevant at or above it) / (its rank).
inline double ap(const std::vector<double>& s, const std::vector<std::uint8_t>& rel) {
    double total = 0.0, relevant = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!rel[i]) continue;
        relevant += 1.0;
        double rank = 1.0, hits = 1.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (j == i || !outranks(s, j, i)) continue;
            rank += 1.0;
            hits += rel[j] ? 1.0 : 0.0;
        }
        total += hits / rank;
    }
    return total / relevant;
}

inline double mean_ap(const mlnl::Matrix& scores, const std::vector<std::uint8_t>& y) {
    const std::size_t n = scores.rows(), K = scores.cols();
    double total = 0.0, used = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> col(n);
        std::vector<std::uint8_t> rel(n);
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = scores(i, k);
            rel[i] = y[i * K + k];
            any = any || rel[i];
        }
        if (!any) continue;
        total += ap(col, rel);
        used += 1.0;
    }
    return total / used;
}

// Returns {CF1, OF1}. Precision or recall with an empty denominator counts as 0.
inline std::pair<double, double> f1(const mlnl::Matrix& p, const std::vector<std::uint8_t>& y, double thr,
                                    bool harmonic_of_macro) {
    const std::size_t n = p.rows(), K = p.cols();
    auto safe = [](double a, double b) { return b > 0.0 ? a / b : 0.0; };
    auto hm = [](double a, double b) { return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; };
    double mp = 0.0, mr = 0.0, mf = 0.0, TP = 0.0, PP = 0.0, AP = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        double tp = 0.0, pp = 0.0, ap_ = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool pred = p(i, k) >= thr, act = y[i * K + k] != 0;
            tp += (pred && act) ? 1.0 : 0.0;
            pp += pred ? 1.0 : 0.0;
            ap_ += act ? 1.0 : 0.0;
        }
        const double prec = safe(tp, pp), rec = safe(tp, ap_);
        mp += prec;
        mr += rec;
        mf += hm(prec, rec);
        TP += tp;
        PP += pp;
        AP += ap_;
    }
    const double Kd = static_cast<double>(K);
    const double cf1 = harmonic_of_macro ? hm(mp / Kd, mr / Kd) : mf / Kd;
    return {cf1, hm(safe(TP, PP), safe(TP, AP))};
}

}  // namespace oracle
