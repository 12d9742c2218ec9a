#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "mlnl/config.hpp"
#include "mlnl/harness.hpp"
#include "mlnl/plot.hpp"

namespace fs = std::filesystem;
using namespace mlnl;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

ExperimentConfig load_config(const Globals& g) {
    ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : parse_config(g.config);
    if (g.seed) cfg.seed = *g.seed;
    if (g.out) cfg.out_dir = *g.out;
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    return cfg;
}

fs::path or_default(const std::string& given, const ExperimentConfig& cfg, const char* name) {
    return given.empty() ? cfg.out_dir / name : fs::path(given);
}

std::vector<std::size_t> sizes_for(const ExperimentConfig& cfg, std::size_t d, std::size_t k) {
    std::vector<std::size_t> sizes{d};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(k);
    return sizes;
}

void print_metrics(const char* what, const MetricsReport& m) {
    std::printf("%s: map=%.6f cf1=%.6f of1=%.6f\n", what, m.map, m.cf1, m.of1);
}

std::optional<Dataset> maybe_read(const fs::path& p) {
    if (!fs::exists(p)) return std::nullopt;
    return read_dataset(p);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-label noisy-label correction toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "master seed (overrides run.seed)");
    app.add_option("--out", g.out, "output directory (overrides run.out)");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset and its gold/silver/test pieces");

    // inject-noise
    std::string inj_in, inj_out;
    std::optional<double> inj_eta;
    auto* inj = app.add_subcommand("inject-noise", "inject symmetric label noise");
    inj->add_option("--input", inj_in, "clean dataset (default <out>/silver_clean.mlnl)");
    inj->add_option("--output", inj_out, "noisy dataset (default <out>/silver.mlnl)");
    inj->add_option("--eta", inj_eta, "noise ratio (default: first noise.eta value)");

    // train-silver
    std::string ts_data, ts_eval, ts_model;
    auto* ts = app.add_subcommand("train-silver", "train the silver model on noisy data with ASL");
    ts->add_option("--data", ts_data, "training data (default <out>/silver.mlnl)");
    ts->add_option("--eval", ts_eval, "per-epoch evaluation data (default <out>/test.mlnl if present)");
    ts->add_option("--model-out", ts_model, "checkpoint (default <out>/model_silver.mlpm)");

    // estimate
    std::string est_method = "galc-slr", est_set = "gold", est_model, est_gold, est_silver, est_singles;
    bool est_no_sigmoid = false;
    std::optional<double> est_eta;
    auto* est = app.add_subcommand("estimate", "estimate the corruption matrix");
    est->add_option("--method", est_method, "galc-slr|glc|true")->check(CLI::IsMember({"galc-slr", "glc", "true"}));
    est->add_option("--estimation-set", est_set, "gold|silver")->check(CLI::IsMember({"gold", "silver"}));
    est->add_flag("--no-final-sigmoid", est_no_sigmoid, "use the raw estimate as the correction");
    est->add_option("--model", est_model, "silver checkpoint (default <out>/model_silver.mlpm)");
    est->add_option("--gold", est_gold, "gold data (default <out>/gold.mlnl)");
    est->add_option("--silver", est_silver, "noisy silver data (default <out>/silver.mlnl)");
    est->add_option("--singles", est_singles, "single-label data (default <out>/singles.mlnl)");
    est->add_option("--eta", est_eta, "injected noise ratio for --method true and the distance report");

    // train-gold
    std::string tg_correction, tg_gold, tg_silver, tg_eval, tg_model;
    auto* tg = app.add_subcommand("train-gold", "train the final model on gold and corrected silver data");
    tg->add_option("--correction", tg_correction, "<matrix.csv> or none")->required();
    tg->add_option("--gold", tg_gold, "gold data (default <out>/gold.mlnl)");
    tg->add_option("--silver", tg_silver, "noisy silver data (default <out>/silver.mlnl)");
    tg->add_option("--eval", tg_eval, "per-epoch evaluation data (default <out>/test.mlnl if present)");
    tg->add_option("--model-out", tg_model, "checkpoint (default <out>/model_gold.mlpm)");

    // evaluate
    std::string ev_model, ev_data;
    auto* ev = app.add_subcommand("evaluate", "compute mAP, CF1 and OF1 of a checkpoint");
    ev->add_option("--model", ev_model, "checkpoint (default <out>/model_gold.mlpm)");
    ev->add_option("--data", ev_data, "clean evaluation data (default <out>/test.mlnl)");

    // sweep
    auto* sw = app.add_subcommand("sweep", "run every noise ratio with asl, galc_slr and the true matrix");

    // ablate
    std::string ab_axis = "trusted_fraction";
    double ab_eta = 0.4;
    auto* ab = app.add_subcommand("ablate", "ablation grid at a fixed noise ratio");
    ab->add_option("--axis", ab_axis, "trusted_fraction|single_label_limit");
    ab->add_option("--eta", ab_eta, "noise ratio")->check(CLI::Range(0.0, 0.999999));

    // plot
    std::string pl_summary, pl_output, pl_metric = "map", pl_kind = "bar";
    auto* pl = app.add_subcommand("plot", "render a summary CSV as SVG");
    pl->add_option("--summary", pl_summary, "summary CSV (default <out>/summary.csv)");
    pl->add_option("--metric", pl_metric, "map|cf1|of1|frobenius_to_true")
        ->check(CLI::IsMember({"map", "cf1", "of1", "frobenius_to_true"}));
    pl->add_option("--kind", pl_kind, "bar|line")->check(CLI::IsMember({"bar", "line"}));
    pl->add_option("--output", pl_output, "SVG path (default <out>/<metric>.svg)");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = load_config(g);
        const SeedPlan seeds = plan_seeds(cfg.seed);

        if (*gen) {
            GenConfig gc = cfg.data;
            gc.seed = seeds.datagen;
            write_dataset(generate(gc), cfg.out_dir / "dataset.mlnl");
            const PreparedData data = prepare_data(cfg, 0.0);
            write_dataset(data.test, cfg.out_dir / "test.mlnl");
            write_dataset(data.gold, cfg.out_dir / "gold.mlnl");
            write_dataset(data.silver_clean, cfg.out_dir / "silver_clean.mlnl");
            write_dataset(data.singles, cfg.out_dir / "singles.mlnl");
            write_text(cfg.out_dir / "resolved.cfg", resolved_config(cfg));
            std::printf("test %zu gold %zu silver %zu singles %zu -> %s\n", data.test.size(), data.gold.size(),
                        data.silver_clean.size(), data.singles.size(), cfg.out_dir.string().c_str());
        } else if (*inj) {
            const double eta = inj_eta.value_or(cfg.etas.front());
            const Dataset clean = read_dataset(or_default(inj_in, cfg, "silver_clean.mlnl"));
            NoiseSpec spec{.eta = eta, .seed = seeds.noise, .per_sample_bernoulli = cfg.noise_bernoulli,
                           .retarget_freed_labels = cfg.noise_retarget_freed};
            const Injection result = inject(clean, spec);
            write_dataset(result.noisy, or_default(inj_out, cfg, "silver.mlnl"));
            write_matrix_csv(symmetric_matrix(clean.class_count, eta), cfg.out_dir / "c_true.csv", eta);
            write_matrix_csv(empirical_matrix(clean, result.noisy).matrix, cfg.out_dir / "c_empirical.csv", eta);
            std::ostringstream flips;
            flips << "sample,from,to\n";
            for (const auto& f : result.log) flips << f.sample << ',' << f.from << ',' << f.to << '\n';
            write_text(cfg.out_dir / "flips.csv", flips.str());
            std::printf("flipped %zu of %zu positives\n", result.log.size(), clean.total_positives());
        } else if (*ts) {
            const Dataset data = read_dataset(or_default(ts_data, cfg, "silver.mlnl"));
            const auto eval = maybe_read(or_default(ts_eval, cfg, "test.mlnl"));
            TrainConfig tc = cfg.silver;
            tc.seed = seeds.shuffle_silver;
            RandomStream init(seeds.init_silver);
            MlpModel m0 = MlpModel::random(sizes_for(cfg, data.dim(), data.class_count), cfg.activation, tc.init_scale, init);
            const TrainResult r =
                train(std::move(m0), data, PlainAsl{}, tc, cfg.asl, eval ? &*eval : nullptr, cfg.threshold, cfg.cf1_mode);
            write_model(r.model, or_default(ts_model, cfg, "model_silver.mlpm"));
            write_history_csv(r.history, cfg.out_dir / "metrics_silver.csv");
            if (eval) print_metrics("silver model on eval", *r.history.back().eval);
        } else if (*est) {
            const EstimatorMethod method = parse_estimator_method(est_method);
            const double eta = est_eta.value_or(cfg.etas.front());
            if (method == EstimatorMethod::true_matrix) {
                const Dataset gold = read_dataset(or_default(est_gold, cfg, "gold.mlnl"));
                const CorruptionMatrix c = symmetric_matrix(gold.class_count, eta);
                write_matrix_csv(c, cfg.out_dir / "correction.csv", eta);
                std::printf("true matrix K=%zu eta=%g -> correction.csv\n", c.classes(), eta);
                return 0;
            }
            const MlpModel f = read_model(or_default(est_model, cfg, "model_silver.mlpm"));
            const Dataset set = read_dataset(est_set == "gold" ? or_default(est_gold, cfg, "gold.mlnl")
                                                               : or_default(est_silver, cfg, "silver.mlnl"));
            EstimationReport report;
            if (method == EstimatorMethod::glc) {
                report = estimate_glc(f, set, cfg.glc_readout);
            } else {
                const Dataset singles = read_dataset(or_default(est_singles, cfg, "singles.mlnl"));
                const SingleLabelPool pool =
                    build_single_label_pool(singles, cfg.split.single_label_limit_per_class, seeds.pool);
                report = estimate_galc_slr(f, set, compute_regulators(f, pool.pool));
            }
            write_matrix_csv(report.raw, cfg.out_dir / "c_hat_raw.csv", eta);
            write_matrix_csv(report.scaled, cfg.out_dir / "c_hat_scaled.csv", eta);
            write_estimation_sidecar(report, cfg.out_dir / "estimation.txt");
            const bool scaled = method == EstimatorMethod::galc_slr && cfg.final_sigmoid && !est_no_sigmoid;
            write_matrix_csv(scaled ? report.scaled : report.raw, cfg.out_dir / "correction.csv", eta);
            const auto cmp = compare_matrices(report.raw.values, symmetric_matrix(set.class_count, eta).values);
            std::printf("frobenius_to_true=%.6f diagonal_gap=%.6f\n", cmp.frobenius_distance, cmp.diagonal_gap);
        } else if (*tg) {
            const Dataset gold = read_dataset(or_default(tg_gold, cfg, "gold.mlnl"));
            const Dataset silver = read_dataset(or_default(tg_silver, cfg, "silver.mlnl"));
            const auto eval = maybe_read(or_default(tg_eval, cfg, "test.mlnl"));
            MaskedDataset combined = combine_gold_silver(gold, silver);
            LossMode mode = PlainAsl{};
            if (tg_correction != "none") {
                mode = CorrectedAsl{read_matrix_csv(fs::path(tg_correction)).values, combined.gold_mask,
                                    cfg.normalize_correction};
            }
            TrainConfig tc = cfg.gold;
            tc.seed = seeds.shuffle_gold;
            RandomStream init(seeds.init_gold);
            MlpModel m0 = MlpModel::random(sizes_for(cfg, gold.dim(), gold.class_count), cfg.activation, tc.init_scale, init);
            const TrainResult r =
                train(std::move(m0), combined.data, mode, tc, cfg.asl, eval ? &*eval : nullptr, cfg.threshold, cfg.cf1_mode);
            write_model(r.model, or_default(tg_model, cfg, "model_gold.mlpm"));
            write_history_csv(r.history, cfg.out_dir / "metrics.csv");
            if (eval) print_metrics("gold model on eval", *r.history.back().eval);
        } else if (*ev) {
            const MlpModel model = read_model(or_default(ev_model, cfg, "model_gold.mlpm"));
            const Dataset data = read_dataset(or_default(ev_data, cfg, "test.mlnl"));
            const MetricsReport m = evaluate(model, data, cfg.threshold, cfg.cf1_mode);
            print_metrics("evaluation", m);
            std::ostringstream csv;
            csv << "class,ap\n";
            for (std::size_t k = 0; k < m.per_class_ap.size(); ++k) csv << k << ',' << format_double(m.per_class_ap[k]) << '\n';
            write_text(cfg.out_dir / "per_class_ap.csv", csv.str());
        } else if (*sw) {
            const SweepResult r = run_sweep(cfg);
            std::cout << r.summary_csv;
            for (const auto& run : r.runs) {
                if (!run.error.empty()) std::cerr << "run " << run.label << " eta=" << run.eta << " failed: " << run.error << '\n';
            }
        } else if (*ab) {
            const SweepResult r = run_ablation(cfg, parse_ablation_axis(ab_axis), ab_eta);
            std::cout << r.summary_csv;
        } else if (*pl) {
            const fs::path src = or_default(pl_summary, cfg, "summary.csv");
            std::ifstream in(src);
            if (!in) throw std::runtime_error("cannot open " + src.string());
            std::string line;
            std::getline(in, line);
            std::vector<std::string> header;
            {
                std::stringstream ss(line);
                for (std::string h; std::getline(ss, h, ',');) header.push_back(h);
            }
            const auto col = std::find(header.begin(), header.end(), pl_metric) - header.begin();
            if (header.size() < 3 || header[0] != "method" || header[1] != "eta" ||
                col == static_cast<std::ptrdiff_t>(header.size())) {
                throw std::runtime_error(src.string() + ": not a summary CSV with a '" + pl_metric + "' column");
            }
            std::map<std::string, Series> by_method;
            std::vector<std::string> order;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                std::vector<std::string> cells;
                std::stringstream ss(line);
                for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
                double x = 0, y = 0;
                if (cells.size() != header.size() || !parse_double(cells[1], x) || !parse_double(cells[col], y)) continue;
                if (!by_method.count(cells[0])) {
                    order.push_back(cells[0]);
                    by_method[cells[0]].name = cells[0];
                }
                by_method[cells[0]].points.emplace_back(x, y);
            }
            std::vector<Series> series;
            for (const auto& name : order) series.push_back(by_method[name]);
            const fs::path dst = pl_output.empty() ? cfg.out_dir / (pl_metric + ".svg") : fs::path(pl_output);
            emit_plot(series, pl_kind == "bar" ? PlotKind::grouped_bar : PlotKind::line, dst,
                      {pl_metric + " vs noise ratio", "noise ratio", pl_metric, {}});
            std::printf("wrote %s\n", dst.string().c_str());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
