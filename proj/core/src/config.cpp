#include "mlnl/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mlnl/error.hpp"

namespace mlnl {

std::string to_string(EstimatorMethod m) {
    switch (m) {
        case EstimatorMethod::galc_slr: return "galc_slr";
        case EstimatorMethod::glc: return "glc";
        case EstimatorMethod::true_matrix: return "true_matrix";
        case EstimatorMethod::none: return "none";
    }
    return "unknown";
}

EstimatorMethod parse_estimator_method(std::string_view text) {
    if (text == "galc_slr" || text == "galc-slr") return EstimatorMethod::galc_slr;
    if (text == "glc") return EstimatorMethod::glc;
    if (text == "true_matrix" || text == "true") return EstimatorMethod::true_matrix;
    if (text == "none") return EstimatorMethod::none;
    throw std::invalid_argument("unknown estimator '" + std::string(text) + "' (expected galc_slr|glc|true_matrix|none)");
}

void ExperimentConfig::validate() const {
    data.validate();
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("data.test_fraction must lie in (0,1)");
    if (etas.empty()) throw std::invalid_argument("noise.eta needs at least one value");
    for (double e : etas) {
        if (!(e >= 0.0 && e < 1.0)) throw std::invalid_argument("noise.eta values must lie in [0,1)");
    }
    split.validate();
    asl.validate();
    silver.validate();
    gold.validate();
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("metrics.threshold must lie in (0,1)");
}

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(trim(item));
    return out;
}

struct Field {
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

double to_real(const std::string& v) {
    double out = 0.0;
    if (!parse_double(v, out) || !std::isfinite(out)) throw std::invalid_argument("expected a real number, got '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
        throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
    }
    return std::stoull(v);
}

std::size_t to_count(const std::string& v) { return static_cast<std::size_t>(to_u64(v)); }

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("expected true|false, got '" + v + "'");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

double in_range(double v, double lo, double hi, bool lo_open, bool hi_open, const char* shown) {
    const bool ok = (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
    if (!ok) throw std::out_of_range("value " + format_double(v) + " outside " + shown);
    return v;
}

std::string join_reals(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out;
}

void add_train_fields(std::map<std::string, Field>& f, const std::string& prefix, TrainConfig ExperimentConfig::*tc) {
    f[prefix + ".epochs"] = {[tc](ExperimentConfig& c, const std::string& v) {
                                 (c.*tc).epochs = to_count(v);
                                 if ((c.*tc).epochs < 1) throw std::out_of_range("epochs must be >= 1");
                             },
                             [tc](const ExperimentConfig& c) { return std::to_string((c.*tc).epochs); }};
    f[prefix + ".batch_size"] = {[tc](ExperimentConfig& c, const std::string& v) {
                                     (c.*tc).batch_size = to_count(v);
                                     if ((c.*tc).batch_size < 1) throw std::out_of_range("batch_size must be >= 1");
                                 },
                                 [tc](const ExperimentConfig& c) { return std::to_string((c.*tc).batch_size); }};
    f[prefix + ".lr"] = {[tc](ExperimentConfig& c, const std::string& v) {
                             (c.*tc).learning_rate = in_range(to_real(v), 0.0, INFINITY, false, true, "[0,inf)");
                         },
                         [tc](const ExperimentConfig& c) { return format_double((c.*tc).learning_rate); }};
    f[prefix + ".optimizer"] = {[tc](ExperimentConfig& c, const std::string& v) { (c.*tc).optimizer = parse_optimizer(v); },
                                [tc](const ExperimentConfig& c) { return to_string((c.*tc).optimizer); }};
    f[prefix + ".init_scale"] = {[tc](ExperimentConfig& c, const std::string& v) {
                                     (c.*tc).init_scale = in_range(to_real(v), 0.0, INFINITY, true, true, "(0,inf)");
                                 },
                                 [tc](const ExperimentConfig& c) { return format_double((c.*tc).init_scale); }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> f;
        f["data.n"] = {[](ExperimentConfig& c, const std::string& v) { c.data.n = to_count(v); },
                       [](const ExperimentConfig& c) { return std::to_string(c.data.n); }};
        f["data.d"] = {[](ExperimentConfig& c, const std::string& v) { c.data.d = to_count(v); },
                       [](const ExperimentConfig& c) { return std::to_string(c.data.d); }};
        f["data.k"] = {[](ExperimentConfig& c, const std::string& v) { c.data.k = to_count(v); },
                       [](const ExperimentConfig& c) { return std::to_string(c.data.k); }};
        f["data.mean_labels"] = {[](ExperimentConfig& c, const std::string& v) {
                                     c.data.mean_labels_per_sample = in_range(to_real(v), 2.0, INFINITY, false, true, "[2,K]");
                                 },
                                 [](const ExperimentConfig& c) { return format_double(c.data.mean_labels_per_sample); }};
        f["data.feature_sigma"] = {[](ExperimentConfig& c, const std::string& v) {
                                       c.data.feature_noise_sigma = in_range(to_real(v), 0.0, INFINITY, true, true, "(0,inf)");
                                   },
                                   [](const ExperimentConfig& c) { return format_double(c.data.feature_noise_sigma); }};
        f["data.imbalance"] = {[](ExperimentConfig& c, const std::string& v) {
                                   c.data.imbalance_exponent = in_range(to_real(v), 0.0, INFINITY, false, true, "[0,inf)");
                               },
                               [](const ExperimentConfig& c) { return format_double(c.data.imbalance_exponent); }};
        f["data.correlation"] = {[](ExperimentConfig& c, const std::string& v) {
                                     c.data.correlation_strength = in_range(to_real(v), 0.0, 1.0, false, false, "[0,1]");
                                 },
                                 [](const ExperimentConfig& c) { return format_double(c.data.correlation_strength); }};
        f["data.test_fraction"] = {[](ExperimentConfig& c, const std::string& v) {
                                       c.test_fraction = in_range(to_real(v), 0.0, 1.0, true, true, "(0,1)");
                                   },
                                   [](const ExperimentConfig& c) { return format_double(c.test_fraction); }};
        f["noise.eta"] = {[](ExperimentConfig& c, const std::string& v) {
                              c.etas.clear();
                              for (const auto& item : split_list(v)) {
                                  c.etas.push_back(in_range(to_real(item), 0.0, 1.0, false, true, "[0,1)"));
                              }
                          },
                          [](const ExperimentConfig& c) { return join_reals(c.etas); }};
        f["noise.bernoulli"] = {[](ExperimentConfig& c, const std::string& v) { c.noise_bernoulli = to_bool(v); },
                                [](const ExperimentConfig& c) { return from_bool(c.noise_bernoulli); }};
        f["noise.retarget_freed"] = {
            [](ExperimentConfig& c, const std::string& v) { c.noise_retarget_freed = to_bool(v); },
            [](const ExperimentConfig& c) { return from_bool(c.noise_retarget_freed); }};
        f["split.trusted_fraction"] = {[](ExperimentConfig& c, const std::string& v) {
                                           c.split.trusted_fraction = in_range(to_real(v), 0.0, 1.0, true, true, "(0,1)");
                                       },
                                       [](const ExperimentConfig& c) { return format_double(c.split.trusted_fraction); }};
        f["split.single_label_limit"] = {[](ExperimentConfig& c, const std::string& v) {
                                             if (v == "unlimited") c.split.single_label_limit_per_class.reset();
                                             else c.split.single_label_limit_per_class = to_count(v);
                                         },
                                         [](const ExperimentConfig& c) {
                                             return c.split.single_label_limit_per_class
                                                        ? std::to_string(*c.split.single_label_limit_per_class)
                                                        : std::string("unlimited");
                                         }};
        f["asl.gamma_plus"] = {[](ExperimentConfig& c, const std::string& v) {
                                   c.asl.gamma_plus = in_range(to_real(v), 0.0, INFINITY, false, true, "[0,inf)");
                               },
                               [](const ExperimentConfig& c) { return format_double(c.asl.gamma_plus); }};
        f["asl.gamma_minus"] = {[](ExperimentConfig& c, const std::string& v) {
                                    c.asl.gamma_minus = in_range(to_real(v), 0.0, INFINITY, false, true, "[0,inf)");
                                },
                                [](const ExperimentConfig& c) { return format_double(c.asl.gamma_minus); }};
        f["asl.margin"] = {[](ExperimentConfig& c, const std::string& v) {
                               c.asl.margin = in_range(to_real(v), 0.0, 1.0, false, true, "[0,1)");
                           },
                           [](const ExperimentConfig& c) { return format_double(c.asl.margin); }};
        f["asl.clamp_eps"] = {[](ExperimentConfig& c, const std::string& v) {
                                  c.asl.clamp_eps = in_range(to_real(v), 0.0, 1e-3, true, false, "(0,1e-3]");
                              },
                              [](const ExperimentConfig& c) { return format_double(c.asl.clamp_eps); }};
        f["model.hidden"] = {[](ExperimentConfig& c, const std::string& v) {
                                 c.hidden.clear();
                                 if (v == "none") return;
                                 for (const auto& item : split_list(v)) {
                                     const std::size_t h = to_count(item);
                                     if (h == 0) throw std::out_of_range("hidden layer sizes must be positive");
                                     c.hidden.push_back(h);
                                 }
                             },
                             [](const ExperimentConfig& c) {
                                 if (c.hidden.empty()) return std::string("none");
                                 std::string out;
                                 for (std::size_t i = 0; i < c.hidden.size(); ++i) out += (i ? ", " : "") + std::to_string(c.hidden[i]);
                                 return out;
                             }};
        f["model.activation"] = {[](ExperimentConfig& c, const std::string& v) { c.activation = parse_activation(v); },
                                 [](const ExperimentConfig& c) { return to_string(c.activation); }};
        add_train_fields(f, "silver", &ExperimentConfig::silver);
        add_train_fields(f, "gold", &ExperimentConfig::gold);
        f["estimator.method"] = {[](ExperimentConfig& c, const std::string& v) { c.estimator = parse_estimator_method(v); },
                                 [](const ExperimentConfig& c) { return to_string(c.estimator); }};
        f["estimator.estimation_set"] = {[](ExperimentConfig& c, const std::string& v) {
                                             if (v == "gold") c.estimation_set = EstimationSet::gold;
                                             else if (v == "silver") c.estimation_set = EstimationSet::silver;
                                             else throw std::invalid_argument("expected gold|silver, got '" + v + "'");
                                         },
                                         [](const ExperimentConfig& c) {
                                             return std::string(c.estimation_set == EstimationSet::gold ? "gold" : "silver");
                                         }};
        f["estimator.final_sigmoid"] = {[](ExperimentConfig& c, const std::string& v) { c.final_sigmoid = to_bool(v); },
                                        [](const ExperimentConfig& c) { return from_bool(c.final_sigmoid); }};
        f["estimator.glc_readout"] = {[](ExperimentConfig& c, const std::string& v) {
                                          if (v == "softmax") c.glc_readout = Readout::softmax;
                                          else if (v == "sigmoid") c.glc_readout = Readout::sigmoid;
                                          else throw std::invalid_argument("expected softmax|sigmoid, got '" + v + "'");
                                      },
                                      [](const ExperimentConfig& c) {
                                          return std::string(c.glc_readout == Readout::softmax ? "softmax" : "sigmoid");
                                      }};
        f["estimator.normalize_correction"] = {
            [](ExperimentConfig& c, const std::string& v) { c.normalize_correction = to_bool(v); },
            [](const ExperimentConfig& c) { return from_bool(c.normalize_correction); }};
        f["metrics.threshold"] = {[](ExperimentConfig& c, const std::string& v) {
                                      c.threshold = in_range(to_real(v), 0.0, 1.0, true, true, "(0,1)");
                                  },
                                  [](const ExperimentConfig& c) { return format_double(c.threshold); }};
        f["metrics.cf1"] = {[](ExperimentConfig& c, const std::string& v) {
                                if (v == "harmonic") c.cf1_mode = Cf1Mode::harmonic_of_macro;
                                else if (v == "mean") c.cf1_mode = Cf1Mode::mean_of_class_f1;
                                else throw std::invalid_argument("expected harmonic|mean, got '" + v + "'");
                            },
                            [](const ExperimentConfig& c) {
                                return std::string(c.cf1_mode == Cf1Mode::harmonic_of_macro ? "harmonic" : "mean");
                            }};
        f["run.seed"] = {[](ExperimentConfig& c, const std::string& v) { c.seed = to_u64(v); },
                         [](const ExperimentConfig& c) { return std::to_string(c.seed); }};
        f["run.out"] = {[](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
                        [](const ExperimentConfig& c) { return c.out_dir.string(); }};
        return f;
    }();
    return table;
}

}  // namespace

ExperimentConfig parse_config_text(std::string_view text) {
    ExperimentConfig cfg;
    std::istringstream in{std::string(text)};
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value', got '" + body + "'");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        const auto it = fields().find(key);
        if (it == fields().end()) throw ParseError(line_no, "unknown key '" + key + "'");
        try {
            it->second.set(cfg, value);
        } catch (const std::out_of_range& e) {
            throw ParseError(line_no, key + ": range error, " + e.what());
        } catch (const std::exception& e) {
            throw ParseError(line_no, key + ": " + e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw ParseError(line_no, std::string("invalid configuration: ") + e.what());
    }
    return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string resolved_config(const ExperimentConfig& cfg) {
    std::string out = "# resolved configuration\n";
    for (const auto& [key, field] : fields()) out += key + " = " + field.get(cfg) + "\n";
    return out;
}

}  // namespace mlnl
