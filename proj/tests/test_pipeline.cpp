#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "ipkit/ipkit.hpp"
#include "scenes.hpp"

using namespace ipkit;
using nlohmann::json;

namespace {

std::string scene_path() {
    const std::string path =
        (std::filesystem::temp_directory_path() / "ipkit_pipeline_scene.pgm").string();
    save_pgm(scenes::blob_scene(), path);
    return path;
}

PipelineConfig base_config(const std::string& image_path) {
    PipelineConfig cfg;
    cfg.image_path = image_path;
    cfg.detector_id = "log";
    cfg.detector = scenes::blob_scene_detector();
    // descriptor defaults: order-2 jet at sigma 2
    cfg.family = TransformFamily::similarity;
    cfg.ranges = scenes::wide_ranges();
    cfg.seed = 11;
    cfg.n_transforms = 8;
    cfg.epsilon_d = 32.0;
    return cfg;
}

} // namespace

TEST_CASE("pipeline config serialization") {
    PipelineConfig cfg = base_config("scene.pgm");
    json j = cfg;
    REQUIRE(j.at("image").get<std::string>() == "scene.pgm");
    REQUIRE(j.at("delta_d").is_null());
    REQUIRE(j.at("seed").get<std::uint64_t>() == 11);
    REQUIRE(j.at("format").get<std::string>() == "json");
    PipelineConfig back = j.get<PipelineConfig>();
    REQUIRE(back.detector_id == "log");
    REQUIRE(back.n_transforms == 8);
    REQUIRE_FALSE(back.delta_d.has_value());
    REQUIRE(back.ranges.shift == 10.0);
    REQUIRE(dump_canonical(json(back)) == dump_canonical(j));

    cfg.delta_d = 1.25;
    json jd = cfg;
    REQUIRE(jd.at("delta_d").get<double>() == 1.25);
    REQUIRE(jd.get<PipelineConfig>().delta_d.value() == 1.25);
}

TEST_CASE("pipeline run on the blob scene") {
    const std::string path = scene_path();
    PipelineConfig cfg = base_config(path);

    std::vector<std::string> stages;
    json report = run_pipeline(cfg, [&](const std::string& s) { stages.push_back(s); });

    REQUIRE(stages == std::vector<std::string>{"load", "detect", "sample_transforms",
                                               "warp_redetect", "detection_error", "calibrate",
                                               "prune", "match", "equivalence", "cost",
                                               "registration", "report"});

    REQUIRE(report.at("schema").get<std::string>() == "pipeline_report/1");
    REQUIRE(report.at("image").at("width").get<int>() == 128);
    REQUIRE(report.at("image").at("height").get<int>() == 128);
    REQUIRE(report.at("detection").at("count").get<std::size_t>() == 60);

    // Calibration replaces the absent displacement bound.
    const auto& cal = report.at("calibration");
    REQUIRE_FALSE(cal.is_null());
    REQUIRE(cal.at("delta_d").get<double>() == 1.75);
    REQUIRE(cal.at("epsilon_d").get<double>() == 32.0);
    REQUIRE(cal.at("achieved").get<bool>());
    REQUIRE(cal.at("descriptor_id").get<std::string>() == "njet:o2:s2");
    REQUIRE(cal.at("sample_count").get<std::size_t>() == 8);
    REQUIRE(report.at("delta_d").get<double>() == 1.75);

    // Pruning the family-level ground truth keeps every transform equivalent.
    REQUIRE(report.at("equivalence").at("all").get<bool>());
    const auto& per = report.at("equivalence").at("per_transform");
    REQUIRE(per.size() == 8);
    for (const auto& e : per) REQUIRE(e.get<bool>());

    const auto& rows = report.at("ground_truth").at("points");
    REQUIRE(rows.size() == 60);
    std::size_t redundant = 0;
    for (const auto& row : rows) {
        redundant += row.at("redundant").get<bool>() ? 1 : 0;
        if (row.at("observations").get<std::size_t>() == 0) {
            REQUIRE(row.at("mean_error").is_null());
            REQUIRE(row.at("max_error").is_null());
        } else {
            REQUIRE(row.at("max_error").get<double>() >= row.at("mean_error").get<double>());
        }
    }
    REQUIRE(redundant == 48);

    const auto& row0 = rows.at(0);
    REQUIRE(row0.at("index").get<std::size_t>() == 0);
    REQUIRE(row0.at("x").get<double>() == Catch::Approx(93.9613978).margin(1e-6));
    REQUIRE(row0.at("y").get<double>() == Catch::Approx(30.9864475).margin(1e-6));
    REQUIRE(row0.at("response").get<double>() == Catch::Approx(15.1788755).margin(1e-6));
    REQUIRE(row0.at("observations").get<std::size_t>() == 8);
    REQUIRE_FALSE(row0.at("redundant").get<bool>());
    REQUIRE(row0.at("mean_error").get<double>() == Catch::Approx(0.0111036634).margin(1e-8));
    REQUIRE(row0.at("max_error").get<double>() == Catch::Approx(0.0253093095).margin(1e-8));

    REQUIRE(report.at("prune").at("retained").at("points").size() == 12);
    REQUIRE(report.at("prune").at("removed").size() == 48);
    REQUIRE(report.at("prune").at("delta_d").get<double>() == 1.75);

    const auto& cost = report.at("cost");
    REQUIRE(cost.at("n").get<std::uint64_t>() == 60);
    REQUIRE(cost.at("n_star").get<std::uint64_t>() == 48);
    REQUIRE(cost.at("cost_full").get<std::uint64_t>() == 1830);
    REQUIRE(cost.at("cost_pruned").get<std::uint64_t>() == 78);
    REQUIRE(cost.at("savings").get<std::uint64_t>() == 1752);
    REQUIRE(cost.at("measured_evaluations").get<std::uint64_t>() == 936);

    const auto& matching = report.at("matching");
    REQUIRE(matching.at("epsilon_d").get<double>() == 32.0);
    REQUIRE(matching.at("mode").get<std::string>() == "threshold");
    REQUIRE(matching.at("described_original").get<std::size_t>() == 36);
    REQUIRE(matching.at("described_pruned").get<std::size_t>() == 12);
    REQUIRE(matching.at("described_target").get<std::size_t>() == 26);
    REQUIRE(matching.at("measured_full").get<std::uint64_t>() == 936);
    REQUIRE(matching.at("measured_pruned").get<std::uint64_t>() == 312);
    REQUIRE(matching.at("matches_full").get<std::size_t>() == 513);
    REQUIRE(matching.at("matches_pruned").get<std::size_t>() == 129);

    const auto& reg = report.at("registration");
    REQUIRE_FALSE(reg.is_null());
    REQUIRE(reg.at("model").get<std::string>() == "similarity");
    REQUIRE(reg.at("n_correspondences").get<std::size_t>() == 12);
    REQUIRE(reg.at("rms_error").get<double>() == Catch::Approx(0.0585248).margin(1e-6));
    REQUIRE(reg.at("max_error").get<double>() == Catch::Approx(0.158001).margin(1e-5));
    const auto& ap = report.at("approximation");
    REQUIRE_FALSE(ap.is_null());
    REQUIRE(ap.at("rms").get<double>() == Catch::Approx(0.0295901).margin(1e-6));
    REQUIRE(ap.at("max").get<double>() == Catch::Approx(0.0572108).margin(1e-6));

    // The echoed config parses back to an equivalent run.
    PipelineConfig echoed = report.at("config").get<PipelineConfig>();
    REQUIRE(echoed.seed == 11);
    REQUIRE_FALSE(echoed.delta_d.has_value());

    std::remove(path.c_str());
}

TEST_CASE("pipeline runs are deterministic") {
    const std::string path = scene_path();
    PipelineConfig cfg = base_config(path);
    cfg.n_transforms = 3;
    const std::string a = dump_canonical(run_pipeline(cfg));
    const std::string b = dump_canonical(run_pipeline(cfg));
    REQUIRE(a == b);
    std::remove(path.c_str());
}

TEST_CASE("an explicit displacement bound skips calibration") {
    const std::string path = scene_path();
    PipelineConfig cfg = base_config(path);
    cfg.n_transforms = 3;
    cfg.delta_d = 0.0;
    json report = run_pipeline(cfg);
    REQUIRE(report.at("calibration").is_null());
    REQUIRE(report.at("delta_d").get<double>() == 0.0);
    // At a zero bound the relation is empty on both sides, so pruning the
    // whole set still preserves it.
    REQUIRE(report.at("equivalence").at("all").get<bool>());

    cfg.delta_d = 1e9;
    json loose = run_pipeline(cfg);
    const auto& cost = loose.at("cost");
    REQUIRE(cost.at("cost_full").get<std::uint64_t>() -
                cost.at("cost_pruned").get<std::uint64_t>() ==
            cost.at("savings").get<std::uint64_t>());
    REQUIRE(loose.at("equivalence").at("all").get<bool>());
    std::remove(path.c_str());
}

TEST_CASE("pipeline failures carry their stage") {
    PipelineConfig cfg = base_config("/nonexistent_dir_38fb/missing.pgm");
    try {
        run_pipeline(cfg);
        FAIL("expected pipeline_failure");
    } catch (const pipeline_failure& e) {
        REQUIRE(e.stage() == "load");
        REQUIRE(std::string(e.what()).rfind("stage load: ", 0) == 0);
    }

    PipelineConfig bad = base_config("whatever.pgm");
    bad.epsilon_d = 0.0;
    try {
        run_pipeline(bad);
        FAIL("expected pipeline_failure");
    } catch (const pipeline_failure& e) {
        REQUIRE(e.stage() == "config");
    }

    bad = base_config("whatever.pgm");
    bad.n_transforms = 0;
    REQUIRE_THROWS_AS(run_pipeline(bad), pipeline_failure);
    bad = base_config("whatever.pgm");
    bad.detector.smoothing_sigma = 0.0;
    REQUIRE_THROWS_AS(run_pipeline(bad), pipeline_failure);
    bad = base_config("whatever.pgm");
    bad.delta_d = -1.0;
    REQUIRE_THROWS_AS(run_pipeline(bad), pipeline_failure);
}

TEST_CASE("csv tables mirror the report") {
    const std::string path = scene_path();
    PipelineConfig cfg = base_config(path);
    json report = run_pipeline(cfg);
    auto tables = pipeline_csv_tables(report);
    REQUIRE(tables.size() == 4);
    REQUIRE(tables[0].name == "points");
    REQUIRE(tables[1].name == "transforms");
    REQUIRE(tables[2].name == "cost");
    REQUIRE(tables[3].name == "registration");

    REQUIRE(tables[0].rows.size() == 60);
    REQUIRE(tables[0].header.size() == 8);
    std::size_t flagged = 0;
    for (const auto& row : tables[0].rows) {
        REQUIRE(row.size() == 8);
        flagged += row[7] == "1" ? 1 : 0;
    }
    REQUIRE(flagged == 48);

    REQUIRE(tables[1].rows.size() == 8);
    for (const auto& row : tables[1].rows) REQUIRE(row[5] == "1");

    REQUIRE(tables[2].rows.size() == 1);
    REQUIRE(tables[2].rows[0] ==
            std::vector<std::string>{"60", "48", "1830", "78", "1752", "936"});

    REQUIRE(tables[3].rows.size() == 1);
    REQUIRE(tables[3].rows[0][0] == "similarity");
    REQUIRE(tables[3].rows[0][1] == "12");
    std::remove(path.c_str());
}

TEST_CASE("confusion matrix counting") {
    ConfusionMatrix m =
        confusion({true, true, false, false}, {true, false, true, false});
    REQUIRE(m.tp == 1);
    REQUIRE(m.fp == 1);
    REQUIRE(m.fn == 1);
    REQUIRE(m.tn == 1);
    REQUIRE(m.agreement() == 0.5);
    REQUIRE(ConfusionMatrix{}.agreement() == 0.0);
    REQUIRE_THROWS_AS(confusion({true}, {true, false}), consistency_error);
}

TEST_CASE("estimator evaluation against a pipeline report") {
    const std::string path = scene_path();
    PipelineConfig cfg = base_config(path);
    json report = run_pipeline(cfg);
    json est = run_estimators(report);

    REQUIRE(est.at("schema").get<std::string>() == "estimator_report/1");
    REQUIRE(est.at("delta_d").get<double>() == 1.75);
    const auto& labels = est.at("labels");
    const std::size_t evaluated = labels.at("evaluated").get<std::size_t>();
    REQUIRE(evaluated + labels.at("excluded_border").get<std::size_t>() == 60);
    REQUIRE(labels.at("redundant").get<std::size_t>() +
                labels.at("correct").get<std::size_t>() ==
            evaluated);
    REQUIRE(labels.at("redundant").get<std::size_t>() > 0);
    REQUIRE(labels.at("correct").get<std::size_t>() > 0);

    for (const char* name : {"sampling", "laplacian", "learned", "random_baseline"}) {
        const auto& section = est.at("estimators").at(name);
        REQUIRE(section.contains("estimate"));
        REQUIRE(section.contains("roc"));
        const double a = section.at("auc").get<double>();
        REQUIRE(a >= 0.0);
        REQUIRE(a <= 1.0);
        const auto& c = section.at("confusion");
        const std::size_t total = c.at("tp").get<std::size_t>() + c.at("fp").get<std::size_t>() +
                                  c.at("tn").get<std::size_t>() + c.at("fn").get<std::size_t>();
        if (std::string(name) == "learned")
            REQUIRE(total == est.at("estimators").at("learned").at("split").at("test")
                                 .get<std::size_t>());
        else
            REQUIRE(total == evaluated);
    }

    // Replaying the report's own transforms ranks near-perfectly.
    REQUIRE(est.at("estimators").at("sampling").at("auc").get<double>() > 0.8);

    const auto& lap = est.at("estimators").at("laplacian");
    REQUIRE(lap.at("delta_hat_source").get<std::string>() == "youden");
    REQUIRE(lap.at("estimate").at("threshold").get<double>() ==
            -lap.at("delta_hat").get<double>());

    const auto& learned = est.at("estimators").at("learned");
    REQUIRE(learned.at("model").at("feature_names").get<std::vector<std::string>>() ==
            std::vector<std::string>{"abs_laplacian", "response", "local_variance",
                                     "jet2_magnitude"});
    REQUIRE(learned.at("split").at("mode").get<std::string>() == "stratified");
    REQUIRE(learned.at("split").at("train").get<std::size_t>() +
                learned.at("split").at("test").get<std::size_t>() ==
            evaluated);
    const double train_acc = learned.at("train_accuracy").get<double>();
    REQUIRE(train_acc >= 0.0);
    REQUIRE(train_acc <= 1.0);

    // A fixed threshold bypasses the Youden sweep.
    json flagged = run_estimators(report, std::nullopt, 0.25);
    REQUIRE(flagged.at("estimators").at("laplacian").at("delta_hat").get<double>() == 0.25);
    REQUIRE(flagged.at("estimators").at("laplacian").at("delta_hat_source").get<std::string>() ==
            "flag");

    // Same report, same seed: the whole evaluation is reproducible.
    REQUIRE(dump_canonical(run_estimators(report)) == dump_canonical(est));

    json not_a_report = {{"schema", "something_else"}};
    REQUIRE_THROWS_AS(run_estimators(not_a_report), format_error);
    json tampered = report;
    tampered["ground_truth"]["points"].erase(tampered["ground_truth"]["points"].size() - 1);
    REQUIRE_THROWS_AS(run_estimators(tampered), consistency_error);

    std::remove(path.c_str());
}
