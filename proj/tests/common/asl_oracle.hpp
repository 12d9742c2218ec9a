#pragma once

// Extended-precision transcription of the asymmetric loss, plus central
// differences taken in long double so that tiny gradient components are not
// swamped by cancellation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mlnl/model.hpp"
#include "mlnl/numerics.hpp"

namespace oracle {

using real = long double;

inline real asl(const std::vector<real>& q, const std::vector<std::uint8_t>& y, const mlnl::AslParams& a) {
    const real eps = a.clamp_eps;
    real total = 0.0L;
    for (std::size_t k = 0; k < q.size(); ++k) {
        const real p = std::min(std::max(q[k], eps), 1.0L - eps);
        if (y[k]) {
            total += std::pow(1.0L - p, static_cast<real>(a.gamma_plus)) * std::log(p);
        } else {
            const real pm = std::max(p - static_cast<real>(a.margin), 0.0L);
            if (pm > 0.0L) total += std::pow(pm, static_cast<real>(a.gamma_minus)) * std::log(1.0L - pm);
        }
    }
    return -total;
}

inline std::vector<real> sigmoid(const std::vector<real>& z) {
    std::vector<real> p(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) p[i] = 1.0L / (1.0L + std::exp(-z[i]));
    return p;
}

// q_j = sum_i C_ij sigmoid(z_i); an empty C means the identity.
inline real corrected(const mlnl::Matrix& c, const std::vector<real>& z, const std::vector<std::uint8_t>& y,
                      const mlnl::AslParams& a) {
    const auto p = sigmoid(z);
    if (c.empty()) return asl(p, y, a);
    std::vector<real> q(z.size(), 0.0L);
    for (std::size_t j = 0; j < z.size(); ++j)
        for (std::size_t i = 0; i < z.size(); ++i) q[j] += static_cast<real>(c(i, j)) * p[i];
    return asl(q, y, a);
}

inline std::vector<double> fd_grad(const mlnl::Matrix& c, const std::vector<double>& z,
                                   const std::vector<std::uint8_t>& y, const mlnl::AslParams& a, real h = 1e-6L) {
    std::vector<real> base(z.begin(), z.end());
    std::vector<double> g(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        auto up = base, down = base;
        up[k] += h;
        down[k] -= h;
        g[k] = static_cast<double>((corrected(c, up, y, a) - corrected(c, down, y, a)) / (2.0L * h));
    }
    return g;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

}  // namespace oracle
