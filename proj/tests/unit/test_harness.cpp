#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mlnl/error.hpp"
#include "mlnl/harness.hpp"
#include "mlnl/plot.hpp"

using namespace mlnl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

std::size_t line_count(const std::string& s) { return count_of(s, "\n"); }

ExperimentConfig small_config(const fs::path& out) {
    ExperimentConfig cfg;
    cfg.data.n = 900;
    cfg.data.d = 8;
    cfg.data.k = 5;
    cfg.data.mean_labels_per_sample = 2.2;
    cfg.hidden = {12};
    cfg.silver.epochs = 3;
    cfg.gold.epochs = 3;
    cfg.silver.batch_size = 32;
    cfg.gold.batch_size = 32;
    cfg.etas = {0.0, 0.2, 0.4};
    cfg.out_dir = out;
    return cfg;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mlnl_unit_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config: defaults, overrides, errors") {
    const ExperimentConfig def;
    CHECK(resolved_config(parse_config_text("")) == resolved_config(def));

    const auto cfg = parse_config_text("# comment\nnoise.eta = 0.4\nsplit.single_label_limit = 10\nmodel.hidden = none\n");
    CHECK(cfg.etas == std::vector<double>{0.4});
    CHECK(cfg.split.single_label_limit_per_class == std::optional<std::size_t>{10});
    CHECK(cfg.hidden.empty());

    try {
        parse_config_text("\nnoise.eta = 1.5\n");
        FAIL("expected an error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("[0,1)") != std::string::npos);
    }
    try {
        parse_config_text("data.n = 10\n\n\nnonsense.key = 1\n");
        FAIL("expected an error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
        CHECK(std::string(e.what()).find("nonsense.key") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("data.n = ten\n"), ParseError);
    CHECK_THROWS_AS(parse_config_text("metrics.threshold = 1\n"), ParseError);
    CHECK_THROWS_AS(parse_config_text("silver.optimizer = sgdm\n"), ParseError);
}

TEST_CASE("config: resolved text parses back to the same config") {
    const auto cfg = parse_config_text(
        "noise.eta = 0, 0.35\nestimator.method = glc\nsilver.lr = 0.0025\nrun.seed = 77\nmetrics.cf1 = mean\n"
        "model.hidden = 16, 8\nestimator.final_sigmoid = false\n");
    const std::string text = resolved_config(cfg);
    CHECK(resolved_config(parse_config_text(text)) == text);
    CHECK(text.find("estimator.method = glc") != std::string::npos);
}

TEST_CASE("config: method names") {
    CHECK(parse_estimator_method("galc-slr") == EstimatorMethod::galc_slr);
    CHECK(parse_estimator_method("true") == EstimatorMethod::true_matrix);
    for (auto m : {EstimatorMethod::galc_slr, EstimatorMethod::glc, EstimatorMethod::true_matrix, EstimatorMethod::none})
        CHECK(parse_estimator_method(to_string(m)) == m);
    CHECK_THROWS(parse_estimator_method("magic"));
}

TEST_CASE("plots") {
    const std::vector<Series> one{{"a", {{0.0, 1.0}, {1.0, 2.0}, {2.0, 1.5}}}};
    const std::string svg = render_plot(one, PlotKind::line, {"t", "x", "y", {}});
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count_of(svg, "<polyline") == 1);
    CHECK(render_plot(one, PlotKind::line) == render_plot(one, PlotKind::line));

    const std::vector<Series> bars{{"s1", {{0.0, 0.3}, {0.2, 0.5}, {0.4, 0.7}}},
                                   {"s2", {{0.0, 0.2}, {0.2, 0.4}, {0.4, 0.6}}}};
    const std::string b = render_plot(bars, PlotKind::grouped_bar);
    const std::string bg = render_plot(bars, PlotKind::grouped_bar, {"", "", "", {"A", "B", "C"}});
    CHECK(count_of(bg, ">B<") == 1);
    CHECK(count_of(b, "<rect") == 6);
    CHECK_THROWS(render_plot({}, PlotKind::line));
    CHECK_THROWS(emit_plot({}, PlotKind::line, scratch("empty.svg")));
}

TEST_CASE("seed plan labels are distinct and stable") {
    const auto a = plan_seeds(1), b = plan_seeds(1), c = plan_seeds(2);
    const std::set<std::uint64_t> distinct{a.datagen, a.test_split, a.split, a.pool, a.noise,
                                           a.init_silver, a.init_gold, a.shuffle_silver, a.shuffle_gold};
    CHECK(distinct.size() == 9);
    CHECK(a.noise == b.noise);
    CHECK(a.noise != c.noise);
}

TEST_CASE("prepared data and gold/silver combination") {
    const auto cfg = small_config(scratch("prep"));
    const auto d = prepare_data(cfg, 0.4);
    for (std::size_t i = 0; i < d.test.size(); ++i) CHECK(d.test.cardinality(i) >= 2);
    for (std::size_t i = 0; i < d.singles.size(); ++i) CHECK(d.singles.cardinality(i) == 1);
    CHECK(d.silver.tag == DatasetTag::noisy);
    CHECK(d.silver.features == d.silver_clean.features);
    CHECK(d.flips.size() > 0);

    const auto mixed = combine_gold_silver(d.gold, d.silver);
    CHECK(mixed.data.size() == d.gold.size() + d.silver.size());
    std::size_t gold_rows = 0;
    for (std::size_t i = 0; i < mixed.gold_mask.size(); ++i) {
        gold_rows += mixed.gold_mask[i];
        CHECK(mixed.gold_mask[i] == (i < d.gold.size() ? 1 : 0));
    }
    CHECK(gold_rows == d.gold.size());
}

TEST_CASE("pipeline: true matrix at eta 0 trains like plain ASL") {
    auto cfg = small_config(scratch("eta0"));
    cfg.normalize_correction = false;
    cfg.estimator = EstimatorMethod::true_matrix;
    const auto with_true = run_pipeline(cfg, 0.0);
    cfg.estimator = EstimatorMethod::none;
    const auto plain = run_pipeline(cfg, 0.0);
    REQUIRE(with_true.gold_history.size() == plain.gold_history.size());
    for (std::size_t e = 0; e < plain.gold_history.size(); ++e)
        CHECK(with_true.gold_history[e].train_loss == plain.gold_history[e].train_loss);
    CHECK(with_true.final_metrics.map == plain.final_metrics.map);
    CHECK_FALSE(plain.used_single_label_pool);
    CHECK_FALSE(plain.correction.has_value());
    CHECK(*with_true.frobenius_to_true == 0.0);
}

TEST_CASE("pipeline: galc run artifacts") {
    const fs::path out = scratch("galc");
    auto cfg = small_config(out);
    cfg.estimator = EstimatorMethod::galc_slr;
    const auto rec = run_pipeline(cfg, 0.4, out);
    CHECK(rec.used_single_label_pool);
    REQUIRE(rec.estimate.has_value());
    REQUIRE(rec.frobenius_to_true.has_value());
    CHECK(rec.silver_history.size() == 3);
    CHECK(rec.gold_history.size() == 3);
    for (const char* f : {"c_hat_raw.csv", "c_hat_scaled.csv", "estimation.txt", "model_silver.mlpm",
                          "metrics_silver.csv", "metrics.csv", "model_gold.mlpm", "c_true.csv", "correction.csv",
                          "summary.csv", "resolved.cfg"})
        CHECK_MESSAGE(fs::exists(out / f), f);

    std::ifstream in(out / "c_hat_raw.csv");
    CHECK(read_matrix_csv(in).values == rec.estimate->raw.values);
    CHECK(line_count(slurp(out / "metrics.csv")) == 1 + 2 * 3);
    CHECK(rec.stages.size() >= 4);
}

TEST_CASE("pipeline: failures carry the stage name") {
    auto cfg = small_config(scratch("fail"));
    cfg.asl.clamp_eps = 0.0;
    try {
        run_pipeline(cfg, 0.4);
        FAIL("expected an error");
    } catch (const StageError& e) {
        CHECK(e.stage_name == "config");
    }
}

TEST_CASE("sweep: grid, outputs and byte-identical replay") {
    const fs::path out = scratch("sweep");
    const auto cfg = small_config(out);
    const auto first = run_sweep(cfg);
    CHECK(first.runs.size() == 9);
    CHECK(line_count(first.summary_csv) == 10);
    CHECK(slurp(out / "summary.csv") == first.summary_csv);
    std::size_t svgs = 0;
    for (const auto& entry : fs::directory_iterator(out)) svgs += entry.path().extension() == ".svg";
    CHECK(svgs >= 4);
    CHECK(fs::exists(out / "eta_0.40" / "galc_slr" / "c_hat_raw.csv"));
    for (const auto& r : first.runs) CHECK(r.error.empty());

    const auto again = run_sweep(cfg, false);
    CHECK(again.summary_csv == first.summary_csv);
}

TEST_CASE("ablation grids") {
    auto cfg = small_config(scratch("ablate"));
    const auto limit = run_ablation(cfg, AblationAxis::single_label_limit, 0.4);
    REQUIRE(limit.runs.size() == 3);
    CHECK(limit.runs[0].label == "L10");
    CHECK(limit.runs[2].label == "unlimited");
    CHECK(fs::exists(cfg.out_dir / "ablation_single_label_limit" / "ablation_summary.csv"));

    const auto trusted = run_ablation(cfg, AblationAxis::trusted_fraction, 0.4);
    CHECK(trusted.runs.size() == 4);
    CHECK(parse_ablation_axis("limit") == AblationAxis::single_label_limit);
    CHECK(parse_ablation_axis(to_string(AblationAxis::trusted_fraction)) == AblationAxis::trusted_fraction);
}

}
