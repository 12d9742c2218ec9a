#include "mlnl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mlnl/error.hpp"

namespace mlnl {

Dataset::Dataset(std::size_t n, std::size_t d, std::size_t k, DatasetTag t)
    : features(n, d), labels(n * k, 0), class_count(k), tag(t) {}

std::size_t Dataset::cardinality(std::size_t i) const {
    auto row = y(i);
    return static_cast<std::size_t>(std::count(row.begin(), row.end(), std::uint8_t{1}));
}

std::size_t Dataset::total_positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out(indices.size(), dim(), class_count, tag);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const std::size_t i = indices[r];
        std::copy_n(x(i).begin(), dim(), out.features.row(r).begin());
        std::copy_n(y(i).begin(), class_count, out.y(r).begin());
    }
    return out;
}

void GenConfig::validate() const {
    if (n == 0 || d == 0 || k == 0) throw std::invalid_argument("GenConfig: N, d and K must be positive");
    if (mean_labels_per_sample > static_cast<double>(k)) {
        throw std::invalid_argument("GenConfig: mean_labels_per_sample exceeds class count K");
    }
    if (!(mean_labels_per_sample >= 2.0)) throw std::invalid_argument("GenConfig: mean_labels_per_sample must be >= 2");
    if (multi_label_only && k < 2) throw std::invalid_argument("GenConfig: multi-label-only mode needs K >= 2");
    if (!(feature_noise_sigma > 0.0)) throw std::invalid_argument("GenConfig: feature_noise_sigma must be > 0");
    if (!(imbalance_exponent >= 0.0)) throw std::invalid_argument("GenConfig: imbalance_exponent must be >= 0");
    if (!(correlation_strength >= 0.0 && correlation_strength <= 1.0)) {
        throw std::invalid_argument("GenConfig: correlation_strength must lie in [0,1]");
    }
}

namespace {

std::size_t draw_weighted(RandomStream& rng, std::span<const double> weights) {
    const double total = sum(weights);
    double target = rng.uniform() * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        last_positive = i;
        if (target < weights[i]) return i;
        target -= weights[i];
    }
    return last_positive;
}

}  // namespace

Dataset generate(const GenConfig& config) {
    config.validate();
    const std::size_t K = config.k;
    const std::size_t d = config.d;
    RandomStream root(config.seed);

    Matrix prototypes(K, d);
    {
        RandomStream rng = root.derive("prototypes");
        for (double& v : prototypes.data()) v = rng.normal();
    }

    std::vector<double> frequency(K);
    for (std::size_t k = 0; k < K; ++k) frequency[k] = std::pow(static_cast<double>(k + 1), -config.imbalance_exponent);

    // Symmetric co-occurrence affinities, each row rescaled to mean 1 over its off-diagonal entries.
    Matrix affinity(K, K, 0.0);
    {
        RandomStream rng = root.derive("cooccurrence");
        for (std::size_t i = 0; i < K; ++i) {
            for (std::size_t j = i + 1; j < K; ++j) {
                const double u = rng.uniform();
                affinity(i, j) = affinity(j, i) = u * u * u;
            }
        }
        for (std::size_t i = 0; i < K && K > 1; ++i) {
            const double mean = sum(affinity.row(i)) / static_cast<double>(K - 1);
            if (mean > 0.0) {
                for (double& v : affinity.row(i)) v /= mean;
            }
        }
    }

    const std::size_t min_labels = config.multi_label_only ? 2 : 1;
    const double extra_mean = config.mean_labels_per_sample - static_cast<double>(min_labels);
    const std::size_t extra_trials = K - min_labels;
    const double extra_p = extra_trials == 0 ? 0.0 : std::clamp(extra_mean / static_cast<double>(extra_trials), 0.0, 1.0);

    Dataset ds(config.n, d, K, DatasetTag::clean);
    RandomStream per_sample = root.derive("samples");
    std::vector<double> weights(K);
    std::vector<double> pull(K);
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < config.n; ++i) {
        RandomStream rng = per_sample.derive("sample", i);

        std::size_t count = min_labels;
        for (std::size_t t = 0; t < extra_trials; ++t) {
            if (rng.uniform() < extra_p) ++count;
        }
        // Keep one negative label so noise injection always has a target.
        if (count == K && K > min_labels) --count;

        active.clear();
        auto labels = ds.y(i);
        std::fill(pull.begin(), pull.end(), 0.0);
        for (std::size_t c = 0; c < count; ++c) {
            for (std::size_t k = 0; k < K; ++k) {
                if (labels[k]) {
                    weights[k] = 0.0;
                    continue;
                }
                double mix = 1.0;
                if (!active.empty()) {
                    mix = (1.0 - config.correlation_strength) +
                          config.correlation_strength * pull[k] / static_cast<double>(active.size());
                }
                weights[k] = frequency[k] * mix;
            }
            if (sum(weights) <= 0.0) {
                // Correlation can zero every remaining weight; fall back to frequencies.
                for (std::size_t k = 0; k < K; ++k) weights[k] = labels[k] ? 0.0 : frequency[k];
            }
            const std::size_t pick = draw_weighted(rng, weights);
            labels[pick] = 1;
            active.push_back(pick);
            for (std::size_t k = 0; k < K; ++k) pull[k] += affinity(pick, k);
        }

        auto x = ds.features.row(i);
        for (std::size_t j = 0; j < d; ++j) x[j] = config.feature_noise_sigma * rng.normal();
        for (std::size_t k : active) {
            auto proto = prototypes.row(k);
            for (std::size_t j = 0; j < d; ++j) x[j] += proto[j];
        }
    }
    return ds;
}

SingleLabelSplit strip_single_label(const Dataset& ds) {
    std::vector<std::size_t> multi, single;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        (ds.cardinality(i) >= 2 ? multi : single).push_back(i);
    }
    return {ds.subset(multi), ds.subset(single)};
}

void SplitSpec::validate() const {
    if (!(trusted_fraction > 0.0 && trusted_fraction < 1.0)) {
        throw std::invalid_argument("SplitSpec: trusted_fraction must lie in (0,1)");
    }
}

GoldSilverSplit split_gold_silver(const Dataset& ds, const SplitSpec& spec) {
    spec.validate();
    const std::size_t n = ds.size();
    const auto n_gold = static_cast<std::size_t>(std::llround(spec.trusted_fraction * static_cast<double>(n)));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    RandomStream rng(spec.seed);
    rng.shuffle(order);

    GoldSilverSplit out;
    out.gold_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_gold));
    out.silver_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_gold), order.end());
    std::sort(out.gold_indices.begin(), out.gold_indices.end());
    std::sort(out.silver_indices.begin(), out.silver_indices.end());
    out.gold = ds.subset(out.gold_indices);
    out.silver = ds.subset(out.silver_indices);
    return out;
}

SingleLabelPool build_single_label_pool(const Dataset& singles, std::optional<std::size_t> limit_per_class,
                                        std::uint64_t seed) {
    const std::size_t K = singles.class_count;
    std::vector<std::size_t> label_of(singles.size());
    for (std::size_t i = 0; i < singles.size(); ++i) {
        auto y = singles.y(i);
        if (singles.cardinality(i) != 1) {
            throw std::invalid_argument("build_single_label_pool: sample " + std::to_string(i) +
                                        " does not have exactly one positive label");
        }
        label_of[i] = static_cast<std::size_t>(std::find(y.begin(), y.end(), std::uint8_t{1}) - y.begin());
    }

    std::vector<std::size_t> order(singles.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (limit_per_class) {
        RandomStream rng(seed);
        rng.shuffle(order);
    }

    std::vector<std::size_t> taken(K, 0);
    std::vector<bool> keep(singles.size(), false);
    for (std::size_t i : order) {
        const std::size_t k = label_of[i];
        if (!limit_per_class || taken[k] < *limit_per_class) {
            keep[i] = true;
            ++taken[k];
        }
    }

    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < singles.size(); ++i) {
        if (keep[i]) selected.push_back(i);
    }

    SingleLabelPool out;
    out.pool = singles.subset(selected);
    for (std::size_t k = 0; k < K; ++k) {
        if (taken[k] == 0) out.empty_classes.push_back(k);
    }
    return out;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("split_train_test: test fraction must lie in (0,1)");
    }
    SplitSpec spec;
    spec.trusted_fraction = test_fraction;
    spec.seed = seed;
    auto split = split_gold_silver(ds, spec);
    return {std::move(split.silver), std::move(split.gold)};
}

void write_dataset(const Dataset& ds, std::ostream& out) {
    if (ds.tag == DatasetTag::noisy) out << "# tag=noisy\n";
    out << "MLNL v1 " << ds.size() << ' ' << ds.dim() << ' ' << ds.class_count << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto x = ds.x(i);
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (j) out << ' ';
            out << format_double(x[j]);
        }
        out << " |";
        auto y = ds.y(i);
        for (std::size_t k = 0; k < y.size(); ++k) {
            if (y[k]) out << ' ' << k;
        }
        out << '\n';
    }
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_dataset(ds, out);
}

namespace {

std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
        const std::size_t start = pos;
        while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r') ++pos;
        if (pos > start) out.push_back(line.substr(start, pos - start));
    }
    return out;
}

bool parse_count(std::string_view token, std::size_t& out) {
    if (token.empty()) return false;
    std::size_t value = 0;
    for (char c : token) {
        if (c < '0' || c > '9') return false;
        value = value * 10 + static_cast<std::size_t>(c - '0');
    }
    out = value;
    return true;
}

}  // namespace

Dataset read_dataset(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    DatasetTag tag = DatasetTag::clean;
    bool have_header = false;
    std::size_t n = 0, d = 0, k = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.front() == '#') {
            if (line.find("tag=noisy") != std::string::npos) tag = DatasetTag::noisy;
            continue;
        }
        auto tok = tokens(line);
        if (tok.size() != 5 || tok[0] != "MLNL" || tok[1] != "v1" || !parse_count(tok[2], n) ||
            !parse_count(tok[3], d) || !parse_count(tok[4], k) || n == 0 || d == 0 || k == 0) {
            throw ParseError(line_no, "malformed header, expected 'MLNL v1 <N> <d> <K>'");
        }
        have_header = true;
        break;
    }
    if (!have_header) throw ParseError(line_no, "missing header");

    Dataset ds(n, d, k, tag);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw ParseError(line_no + 1, "expected " + std::to_string(n) + " sample rows");
        ++line_no;
        const auto bar = line.find('|');
        if (bar == std::string::npos) throw ParseError(line_no, "missing '|' separator");
        auto feat = tokens(std::string_view(line).substr(0, bar));
        if (feat.size() != d) {
            throw ParseError(line_no, "expected " + std::to_string(d) + " features, found " + std::to_string(feat.size()));
        }
        auto x = ds.features.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            if (!parse_double(feat[j], x[j])) throw ParseError(line_no, "bad feature value '" + std::string(feat[j]) + "'");
        }
        auto lab = tokens(std::string_view(line).substr(bar + 1));
        auto y = ds.y(i);
        std::size_t previous = 0;
        for (std::size_t t = 0; t < lab.size(); ++t) {
            std::size_t idx = 0;
            if (!parse_count(lab[t], idx)) throw ParseError(line_no, "bad label index '" + std::string(lab[t]) + "'");
            if (idx >= k) {
                throw ParseError(line_no, "label index " + std::to_string(idx) + " out of range for K=" + std::to_string(k));
            }
            if (t > 0 && idx <= previous) throw ParseError(line_no, "label indices must be strictly ascending");
            previous = idx;
            y[idx] = 1;
        }
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!tokens(line).empty()) throw ParseError(line_no, "unexpected content after " + std::to_string(n) + " rows");
    }
    return ds;
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_dataset(in);
}

}  // namespace mlnl
