#include "mlnl/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mlnl/error.hpp"

namespace mlnl {

std::string to_string(MatrixKind kind) {
    switch (kind) {
        case MatrixKind::true_row_stochastic: return "true_row_stochastic";
        case MatrixKind::estimated_raw: return "estimated_raw";
        case MatrixKind::estimated_scaled: return "estimated_scaled";
    }
    return "unknown";
}

void NoiseSpec::validate() const {
    if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("NoiseSpec: eta must lie in [0,1)");
}

CorruptionMatrix symmetric_matrix(std::size_t K, double eta) {
    if (K < 2) throw std::invalid_argument("symmetric_matrix: K must be at least 2");
    if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("symmetric_matrix: eta must lie in [0,1)");
    // Entries are multiples of 2^-52, so every partial row sum is exact and
    // rows add to exactly 1 in any order. Each entry is within K * 2^-53 of
    // the closed form.
    const double quantum = 0x1.0p-52;
    const double off = std::nearbyint(eta / static_cast<double>(K - 1) / quantum) * quantum;
    const double diag = 1.0 - static_cast<double>(K - 1) * off;
    Matrix c(K, K, off);
    for (std::size_t i = 0; i < K; ++i) c(i, i) = diag;
    return {std::move(c), MatrixKind::true_row_stochastic};
}

Injection inject(const Dataset& clean, const NoiseSpec& spec) {
    spec.validate();
    if (clean.tag != DatasetTag::clean) throw std::invalid_argument("inject: input dataset must be clean");
    const std::size_t K = clean.class_count;

    Injection out{clean, {}};
    out.noisy.tag = DatasetTag::noisy;
    if (spec.eta == 0.0) return out;

    for (std::size_t i = 0; i < clean.size(); ++i) {
        if (clean.cardinality(i) == K) {
            throw std::invalid_argument("inject: sample " + std::to_string(i) +
                                        " has every label positive, no flip target exists");
        }
    }

    struct Pair {
        std::size_t sample;
        std::size_t label;
    };
    std::vector<Pair> positives;
    positives.reserve(clean.total_positives());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        auto y = clean.y(i);
        for (std::size_t k = 0; k < K; ++k) {
            if (y[k]) positives.push_back({i, k});
        }
    }

    RandomStream rng(spec.seed);
    std::vector<bool> selected(positives.size(), false);
    if (spec.per_sample_bernoulli) {
        for (std::size_t p = 0; p < positives.size(); ++p) selected[p] = rng.uniform() < spec.eta;
    } else {
        const auto count = static_cast<std::size_t>(std::llround(spec.eta * static_cast<double>(positives.size())));
        // Partial Fisher-Yates over pair indices.
        std::vector<std::size_t> order(positives.size());
        for (std::size_t p = 0; p < order.size(); ++p) order[p] = p;
        for (std::size_t p = 0; p < count; ++p) {
            const std::size_t j = p + static_cast<std::size_t>(rng.below(order.size() - p));
            std::swap(order[p], order[j]);
            selected[order[p]] = true;
        }
    }

    // Positives are enumerated in (sample, label) order, so this walk is the sequential application order.
    std::vector<bool> excluded(K);
    for (std::size_t p = 0; p < positives.size(); ++p) {
        if (!selected[p]) continue;
        const auto [i, k] = positives[p];
        auto y = out.noisy.y(i);
        const auto y0 = clean.y(i);
        y[k] = 0;
        std::size_t open = 0;
        for (std::size_t j = 0; j < K; ++j) {
            excluded[j] = y[j] != 0 || j == k || (!spec.retarget_freed_labels && y0[j] != 0);
            open += !excluded[j];
        }
        if (open == 0) {
            for (std::size_t j = 0; j < K; ++j) excluded[j] = y[j] != 0 || j == k;
        }
        const std::size_t target = draw_uniform_index(rng, excluded);
        y[target] = 1;
        out.log.push_back({i, k, target});
    }
    return out;
}

EmpiricalCorruption empirical_matrix(const Dataset& clean, const Dataset& noisy) {
    if (clean.size() != noisy.size() || clean.class_count != noisy.class_count) {
        throw std::invalid_argument("empirical_matrix: datasets differ in shape");
    }
    const std::size_t K = clean.class_count;
    Matrix counts(K, K, 0.0);
    std::vector<std::size_t> gained;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        auto yc = clean.y(i);
        auto yn = noisy.y(i);
        gained.clear();
        for (std::size_t j = 0; j < K; ++j) {
            if (yn[j] && !yc[j]) gained.push_back(j);
        }
        for (std::size_t k = 0; k < K; ++k) {
            if (!yc[k]) continue;
            if (yn[k]) {
                counts(k, k) += 1.0;
            } else if (!gained.empty()) {
                const double share = 1.0 / static_cast<double>(gained.size());
                for (std::size_t j : gained) counts(k, j) += share;
            }
        }
    }

    EmpiricalCorruption out;
    out.matrix.kind = MatrixKind::true_row_stochastic;
    out.matrix.values = Matrix(K, K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const double total = sum(counts.row(k));
        if (total <= 0.0) {
            out.matrix.values(k, k) = 1.0;
            out.empty_rows.push_back(k);
            continue;
        }
        // Same 2^-52 grid as symmetric_matrix; the rounding residue goes to the largest entry.
        const double quantum = 0x1.0p-52;
        auto row = out.matrix.values.row(k);
        std::size_t largest = 0;
        double assigned = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
            row[j] = std::nearbyint(counts(k, j) / total / quantum) * quantum;
            assigned += row[j];
            if (row[j] > row[largest]) largest = j;
        }
        row[largest] += 1.0 - assigned;
    }
    return out;
}

void write_matrix_csv(const CorruptionMatrix& m, std::ostream& out, double eta) {
    out << "# kind=" << to_string(m.kind) << " K=" << m.classes();
    if (eta >= 0.0) out << " eta=" << format_double(eta);
    out << '\n';
    for (std::size_t i = 0; i < m.values.rows(); ++i) {
        for (std::size_t j = 0; j < m.values.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m.values(i, j));
        }
        out << '\n';
    }
}

void write_matrix_csv(const CorruptionMatrix& m, const std::filesystem::path& path, double eta) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_matrix_csv(m, out, eta);
}

CorruptionMatrix read_matrix_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    CorruptionMatrix out;
    std::vector<double> entries;
    std::size_t cols = 0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (line_no == 1) {
                if (line.find("kind=estimated_raw") != std::string::npos) out.kind = MatrixKind::estimated_raw;
                if (line.find("kind=estimated_scaled") != std::string::npos) out.kind = MatrixKind::estimated_scaled;
                continue;
            }
            throw ParseError(line_no, "comment allowed only on the first line");
        }
        std::size_t count = 0;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            std::string_view cell(line.data() + start, (comma == std::string::npos ? line.size() : comma) - start);
            while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
            while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
            double v = 0.0;
            if (!parse_double(cell, v)) throw ParseError(line_no, "bad matrix entry '" + std::string(cell) + "'");
            entries.push_back(v);
            ++count;
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (rows == 0) cols = count;
        if (count != cols) throw ParseError(line_no, "row has " + std::to_string(count) + " entries, expected " + std::to_string(cols));
        ++rows;
    }
    if (rows == 0 || rows != cols) throw ParseError(line_no, "matrix must be square and non-empty");
    out.values = Matrix(rows, cols, std::move(entries));
    return out;
}

CorruptionMatrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_matrix_csv(in);
}

}  // namespace mlnl
