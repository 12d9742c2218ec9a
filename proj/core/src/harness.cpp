#include "mlnl/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mlnl/plot.hpp"

namespace mlnl {

namespace fs = std::filesystem;

SeedPlan plan_seeds(std::uint64_t master) {
    const RandomStream root(master);
    auto pick = [&](const char* label) { return root.derive(label).next_u64(); };
    SeedPlan p;
    p.datagen = pick("datagen");
    p.test_split = pick("test_split");
    p.split = pick("split");
    p.pool = pick("pool");
    p.noise = pick("noise");
    p.init_silver = pick("init.silver");
    p.init_gold = pick("init.gold");
    p.shuffle_silver = pick("shuffle.silver");
    p.shuffle_gold = pick("shuffle.gold");
    return p;
}

PreparedData prepare_data(const ExperimentConfig& cfg, double eta) {
    const SeedPlan seeds = plan_seeds(cfg.seed);
    GenConfig gen = cfg.data;
    gen.seed = seeds.datagen;
    const Dataset all = generate(gen);

    auto [train_part, test_part] = split_train_test(all, cfg.test_fraction, seeds.test_split);
    SingleLabelSplit train_split = strip_single_label(train_part);

    SplitSpec spec = cfg.split;
    spec.seed = seeds.split;
    GoldSilverSplit gs = split_gold_silver(train_split.multi_only, spec);

    NoiseSpec noise{.eta = eta, .seed = seeds.noise, .per_sample_bernoulli = cfg.noise_bernoulli,
                    .retarget_freed_labels = cfg.noise_retarget_freed};
    Injection inj = inject(gs.silver, noise);

    PreparedData out;
    out.test = strip_single_label(test_part).multi_only;
    out.singles = std::move(train_split.singles);
    out.gold = std::move(gs.gold);
    out.silver_clean = std::move(gs.silver);
    out.silver = std::move(inj.noisy);
    out.flips = std::move(inj.log);
    return out;
}

MaskedDataset combine_gold_silver(const Dataset& gold, const Dataset& silver) {
    if (gold.dim() != silver.dim() || gold.class_count != silver.class_count) {
        throw std::invalid_argument("combine_gold_silver: shape mismatch");
    }
    const std::size_t d = gold.dim(), k = gold.class_count;
    MaskedDataset out{Dataset(gold.size() + silver.size(), d, k, DatasetTag::noisy), {}};
    out.gold_mask.assign(out.data.size(), 0);
    std::size_t r = 0;
    for (const Dataset* part : {&gold, &silver}) {
        for (std::size_t i = 0; i < part->size(); ++i, ++r) {
            std::copy_n(part->x(i).begin(), d, out.data.features.row(r).begin());
            std::copy_n(part->y(i).begin(), k, out.data.y(r).begin());
            out.gold_mask[r] = part == &gold ? 1 : 0;
        }
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
}

namespace {

using Clock = std::chrono::steady_clock;

std::string fixed6(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string method_label(EstimatorMethod m) { return m == EstimatorMethod::none ? "asl" : to_string(m); }

std::vector<std::size_t> layer_sizes(const ExperimentConfig& cfg) {
    std::vector<std::size_t> sizes{cfg.data.d};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(cfg.data.k);
    return sizes;
}

template <typename F>
auto timed_stage(RunRecord& rec, const std::string& name, F&& body) {
    const auto t0 = Clock::now();
    auto finish = [&] { rec.stages.push_back({name, std::chrono::duration<double>(Clock::now() - t0).count()}); };
    try {
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            finish();
        } else {
            auto result = body();
            finish();
            return result;
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

std::string eta_tag(double eta) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "eta_%.2f", eta);
    return buf;
}

}  // namespace

void write_history_csv(const std::vector<EpochRecord>& history, const fs::path& path) {
    std::string text = "epoch,split,map,cf1,of1,loss\n";
    for (const auto& rec : history) {
        text += std::to_string(rec.epoch) + ",train,nan,nan,nan," + fixed6(rec.train_loss) + "\n";
        if (rec.eval) {
            text += std::to_string(rec.epoch) + ",test," + fixed6(rec.eval->map) + "," + fixed6(rec.eval->cf1) + "," +
                    fixed6(rec.eval->of1) + ",nan\n";
        }
    }
    write_text(path, text);
}

std::string summary_table(const std::vector<RunRecord>& runs) {
    std::string text = "method,eta,map,cf1,of1,frobenius_to_true\n";
    for (const auto& r : runs) {
        const bool ok = r.error.empty();
        text += r.label + "," + fixed6(r.eta) + "," + (ok ? fixed6(r.final_metrics.map) : "nan") + "," +
                (ok ? fixed6(r.final_metrics.cf1) : "nan") + "," + (ok ? fixed6(r.final_metrics.of1) : "nan") + "," +
                (r.frobenius_to_true ? fixed6(*r.frobenius_to_true) : "NA") + "\n";
    }
    return text;
}

RunRecord run_pipeline(const ExperimentConfig& cfg_in, double eta, const std::optional<fs::path>& out_dir) {
    const auto t_start = Clock::now();
    ExperimentConfig cfg = cfg_in;
    cfg.etas = {eta};
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw StageError("config", e.what());
    }

    RunRecord rec;
    rec.method = cfg.estimator;
    rec.label = method_label(cfg.estimator);
    rec.eta = eta;
    {
        ExperimentConfig hashed = cfg;
        hashed.out_dir.clear();
        rec.config_hash = hex64(fnv1a64(resolved_config(hashed)));
    }
    if (out_dir) {
        fs::create_directories(*out_dir);
        ExperimentConfig echoed = cfg;
        echoed.out_dir = *out_dir;
        write_text(*out_dir / "resolved.cfg", resolved_config(echoed));
    }

    const SeedPlan seeds = plan_seeds(cfg.seed);
    const std::size_t K = cfg.data.k;
    PreparedData data = timed_stage(rec, "data", [&] { return prepare_data(cfg, eta); });
    const std::vector<std::size_t> sizes = layer_sizes(cfg);

    std::optional<Matrix> correction;
    bool normalize = false;
    if (cfg.estimator == EstimatorMethod::galc_slr || cfg.estimator == EstimatorMethod::glc) {
        TrainConfig tc = cfg.silver;
        tc.seed = seeds.shuffle_silver;
        TrainResult f = timed_stage(rec, "train_silver", [&] {
            RandomStream init(seeds.init_silver);
            MlpModel m0 = MlpModel::random(sizes, cfg.activation, tc.init_scale, init);
            return train(std::move(m0), data.silver, PlainAsl{}, tc, cfg.asl, &data.test, cfg.threshold, cfg.cf1_mode);
        });
        rec.silver_history = f.history;
        const Dataset& est_set = cfg.estimation_set == EstimationSet::gold ? data.gold : data.silver;

        EstimationReport est = timed_stage(rec, "estimate", [&] {
            if (cfg.estimator == EstimatorMethod::glc) return estimate_glc(f.model, est_set, cfg.glc_readout);
            SingleLabelPool pool = build_single_label_pool(data.singles, cfg.split.single_label_limit_per_class, seeds.pool);
            rec.used_single_label_pool = true;
            const RegulatorMatrix reg = compute_regulators(f.model, pool.pool);
            return estimate_galc_slr(f.model, est_set, reg);
        });
        const bool scaled = cfg.estimator == EstimatorMethod::galc_slr && cfg.final_sigmoid;
        correction = scaled ? est.scaled.values : est.raw.values;
        normalize = cfg.normalize_correction;
        rec.frobenius_to_true = compare_matrices(est.raw.values, symmetric_matrix(K, eta).values).frobenius_distance;
        if (out_dir) {
            write_matrix_csv(est.raw, *out_dir / "c_hat_raw.csv", eta);
            write_matrix_csv(est.scaled, *out_dir / "c_hat_scaled.csv", eta);
            write_estimation_sidecar(est, *out_dir / "estimation.txt");
            write_model(f.model, *out_dir / "model_silver.mlpm");
            write_history_csv(f.history, *out_dir / "metrics_silver.csv");
        }
        rec.estimate = std::move(est);
    } else if (cfg.estimator == EstimatorMethod::true_matrix) {
        correction = symmetric_matrix(K, eta).values;
        rec.frobenius_to_true = 0.0;
    }

    MaskedDataset combined = combine_gold_silver(data.gold, data.silver);
    LossMode mode = PlainAsl{};
    if (correction) mode = CorrectedAsl{*correction, combined.gold_mask, normalize};

    TrainConfig tg = cfg.gold;
    tg.seed = seeds.shuffle_gold;
    TrainResult g = timed_stage(rec, "train_gold", [&] {
        RandomStream init(seeds.init_gold);
        MlpModel m0 = MlpModel::random(sizes, cfg.activation, tg.init_scale, init);
        return train(std::move(m0), combined.data, mode, tg, cfg.asl, &data.test, cfg.threshold, cfg.cf1_mode);
    });
    rec.gold_history = g.history;
    rec.final_metrics = timed_stage(rec, "evaluate", [&] { return evaluate(g.model, data.test, cfg.threshold, cfg.cf1_mode); });
    rec.correction = std::move(correction);

    if (out_dir) {
        write_history_csv(g.history, *out_dir / "metrics.csv");
        write_model(g.model, *out_dir / "model_gold.mlpm");
        write_matrix_csv(symmetric_matrix(K, eta), *out_dir / "c_true.csv", eta);
        if (rec.correction) {
            CorruptionMatrix used{*rec.correction,
                                  cfg.estimator == EstimatorMethod::true_matrix ? MatrixKind::true_row_stochastic
                                  : cfg.estimator == EstimatorMethod::galc_slr && cfg.final_sigmoid
                                      ? MatrixKind::estimated_scaled
                                      : MatrixKind::estimated_raw};
            write_matrix_csv(used, *out_dir / "correction.csv", eta);
        }
        write_text(*out_dir / "summary.csv", summary_table({rec}));
    }
    rec.wall_seconds = std::chrono::duration<double>(Clock::now() - t_start).count();
    return rec;
}

namespace {

RunRecord run_recorded(const ExperimentConfig& cfg, double eta, const std::optional<fs::path>& dir,
                       const std::string& label) {
    RunRecord rec;
    try {
        rec = run_pipeline(cfg, eta, dir);
    } catch (const std::exception& e) {
        rec.method = cfg.estimator;
        rec.eta = eta;
        rec.error = e.what();
    }
    rec.label = label;
    return rec;
}

Series metric_series(const std::vector<RunRecord>& runs, const std::string& label, double MetricsReport::*metric) {
    Series s{label, {}};
    for (const auto& r : runs) {
        if (r.label == label && r.error.empty()) s.points.emplace_back(r.eta, r.final_metrics.*metric);
    }
    return s;
}

void write_errors(const std::vector<RunRecord>& runs, const fs::path& path) {
    std::string text;
    for (const auto& r : runs) {
        if (!r.error.empty()) text += r.label + " eta=" + fixed6(r.eta) + ": " + r.error + "\n";
    }
    if (!text.empty()) write_text(path, text);
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg, bool write_run_artifacts) {
    cfg.validate();
    const fs::path root = cfg.out_dir;
    fs::create_directories(root);
    write_text(root / "resolved.cfg", resolved_config(cfg));

    const EstimatorMethod methods[] = {EstimatorMethod::none, EstimatorMethod::galc_slr, EstimatorMethod::true_matrix};
    SweepResult result;
    for (double eta : cfg.etas) {
        for (EstimatorMethod m : methods) {
            ExperimentConfig run_cfg = cfg;
            run_cfg.estimator = m;
            std::optional<fs::path> dir;
            if (write_run_artifacts) dir = root / eta_tag(eta) / method_label(m);
            result.runs.push_back(run_recorded(run_cfg, eta, dir, method_label(m)));
        }
    }
    result.summary_csv = summary_table(result.runs);
    write_text(root / "summary.csv", result.summary_csv);
    write_errors(result.runs, root / "errors.txt");

    const struct {
        const char* file;
        const char* name;
        double MetricsReport::*field;
    } metrics[] = {{"map_vs_eta.svg", "mAP", &MetricsReport::map},
                   {"cf1_vs_eta.svg", "CF1", &MetricsReport::cf1},
                   {"of1_vs_eta.svg", "OF1", &MetricsReport::of1}};
    for (const auto& m : metrics) {
        std::vector<Series> series;
        for (EstimatorMethod method : methods) series.push_back(metric_series(result.runs, method_label(method), m.field));
        try {
            emit_plot(series, PlotKind::grouped_bar, root / m.file,
                      {std::string(m.name) + " vs noise ratio", "noise ratio", m.name, {}});
        } catch (const std::invalid_argument&) {
            // every run failed; the error file says why
        }
    }
    for (double eta : cfg.etas) {
        std::vector<Series> series;
        for (const auto& r : result.runs) {
            if (r.eta != eta || !r.error.empty()) continue;
            Series s{r.label, {}};
            for (const auto& h : r.gold_history) {
                if (h.eval) s.points.emplace_back(static_cast<double>(h.epoch), h.eval->map);
            }
            series.push_back(std::move(s));
        }
        if (series.empty()) continue;
        char title[64];
        std::snprintf(title, sizeof(title), "test mAP per epoch, eta = %.2f", eta);
        emit_plot(series, PlotKind::line, root / ("map_vs_epoch_" + eta_tag(eta) + ".svg"), {title, "epoch", "mAP", {}});
    }
    return result;
}

std::string to_string(AblationAxis axis) {
    return axis == AblationAxis::trusted_fraction ? "trusted_fraction" : "single_label_limit";
}

AblationAxis parse_ablation_axis(std::string_view text) {
    if (text == "trusted_fraction" || text == "trusted") return AblationAxis::trusted_fraction;
    if (text == "single_label_limit" || text == "limit") return AblationAxis::single_label_limit;
    throw std::invalid_argument("unknown ablation axis '" + std::string(text) +
                                "' (expected trusted_fraction|single_label_limit)");
}

SweepResult run_ablation(const ExperimentConfig& cfg, AblationAxis axis, double eta) {
    cfg.validate();
    const fs::path root = cfg.out_dir / ("ablation_" + to_string(axis));
    fs::create_directories(root);
    write_text(root / "resolved.cfg", resolved_config(cfg));

    SweepResult result;
    std::vector<Series> series;
    std::vector<std::string> ticks;
    if (axis == AblationAxis::trusted_fraction) {
        const double fractions[] = {0.05, 0.10};
        const EstimatorMethod methods[] = {EstimatorMethod::galc_slr, EstimatorMethod::true_matrix};
        for (EstimatorMethod m : methods) series.push_back({m == EstimatorMethod::galc_slr ? "estimated" : "true", {}});
        for (std::size_t fi = 0; fi < 2; ++fi) {
            char tag[32];
            std::snprintf(tag, sizeof(tag), "tf_%.2f", fractions[fi]);
            ticks.push_back(std::to_string(static_cast<int>(std::lround(fractions[fi] * 100))) + "% trusted");
            for (std::size_t mi = 0; mi < 2; ++mi) {
                ExperimentConfig run_cfg = cfg;
                run_cfg.split.trusted_fraction = fractions[fi];
                run_cfg.estimator = methods[mi];
                const std::string label = method_label(methods[mi]) + "_" + tag;
                RunRecord r = run_recorded(run_cfg, eta, root / label, label);
                if (r.error.empty()) series[mi].points.emplace_back(static_cast<double>(fi), r.final_metrics.map);
                result.runs.push_back(std::move(r));
            }
        }
    } else {
        const std::optional<std::size_t> limits[] = {10, 50, std::nullopt};
        series.push_back({"galc_slr", {}});
        for (std::size_t li = 0; li < 3; ++li) {
            const std::string label = limits[li] ? "L" + std::to_string(*limits[li]) : "unlimited";
            ticks.push_back(label);
            ExperimentConfig run_cfg = cfg;
            run_cfg.estimator = EstimatorMethod::galc_slr;
            run_cfg.split.single_label_limit_per_class = limits[li];
            RunRecord r = run_recorded(run_cfg, eta, root / label, label);
            if (r.error.empty()) series[0].points.emplace_back(static_cast<double>(li), r.final_metrics.map);
            result.runs.push_back(std::move(r));
        }
    }
    result.summary_csv = summary_table(result.runs);
    write_text(root / "ablation_summary.csv", result.summary_csv);
    write_errors(result.runs, root / "errors.txt");
    try {
        emit_plot(series, PlotKind::grouped_bar, root / "ablation_map.svg",
                  {"ablation: " + to_string(axis), to_string(axis), "mAP", ticks});
    } catch (const std::invalid_argument&) {
    }
    return result;
}

}  // namespace mlnl
