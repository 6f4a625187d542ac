#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ipkit/calibrate.hpp"
#include "ipkit/correspond.hpp"
#include "ipkit/describe.hpp"
#include "ipkit/detect.hpp"
#include "ipkit/errors.hpp"
#include "ipkit/evaluate.hpp"
#include "ipkit/image.hpp"
#include "ipkit/image_io.hpp"
#include "ipkit/irredundant.hpp"
#include "ipkit/json_io.hpp"
#include "ipkit/rng.hpp"

namespace ipkit {

struct PipelineConfig {
    std::string image_path;
    std::string detector_id = "harris";
    DetectorParams detector;
    DescriptorParams descriptor;
    TransformFamily family = TransformFamily::similarity;
    SamplerRanges ranges;
    std::uint64_t seed = 1;
    std::size_t n_transforms = 10;
    std::optional<double> delta_d; // absent: calibrate from the descriptor
    double epsilon_d = 1.0;
    double percentile = 95.0;
    int threads = 1;          // reserved; all stages currently run sequentially
    std::string format = "json"; // "csv" additionally emits the tabular sections
};

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
    j = {{"image", c.image_path},
         {"detector_id", c.detector_id},
         {"detector", c.detector},
         {"descriptor", c.descriptor},
         {"family", family_name(c.family)},
         {"ranges",
          {{"shift", detail::real(c.ranges.shift)},
           {"angle", detail::real(c.ranges.angle)},
           {"scale_min", detail::real(c.ranges.scale_min)},
           {"scale_max", detail::real(c.ranges.scale_max)},
           {"shear", detail::real(c.ranges.shear)}}},
         {"seed", c.seed},
         {"n_transforms", c.n_transforms},
         {"delta_d", c.delta_d.has_value() ? nlohmann::json(detail::real(*c.delta_d))
                                           : nlohmann::json(nullptr)},
         {"epsilon_d", detail::real(c.epsilon_d)},
         {"percentile", detail::real(c.percentile)},
         {"threads", c.threads},
         {"format", c.format}};
}

inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
    c.image_path = j.at("image").get<std::string>();
    c.detector_id = j.at("detector_id").get<std::string>();
    c.detector = j.at("detector").get<DetectorParams>();
    c.descriptor = j.at("descriptor").get<DescriptorParams>();
    c.family = family_from_name(j.at("family").get<std::string>());
    const auto& r = j.at("ranges");
    c.ranges.shift = r.at("shift").get<double>();
    c.ranges.angle = r.at("angle").get<double>();
    c.ranges.scale_min = r.at("scale_min").get<double>();
    c.ranges.scale_max = r.at("scale_max").get<double>();
    c.ranges.shear = r.at("shear").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.n_transforms = j.at("n_transforms").get<std::size_t>();
    if (j.at("delta_d").is_null()) c.delta_d = std::nullopt;
    else c.delta_d = j.at("delta_d").get<double>();
    c.epsilon_d = j.at("epsilon_d").get<double>();
    c.percentile = j.at("percentile").get<double>();
    c.threads = j.at("threads").get<int>();
    c.format = j.at("format").get<std::string>();
}

/// Raised when a pipeline stage fails; carries the stage name for the CLI's
/// stage-labeled diagnostics.
class pipeline_failure : public std::runtime_error {
  public:
    pipeline_failure(const std::string& stage, const std::string& message)
        : std::runtime_error("stage " + stage + ": " + message), stage_(stage) {}
    const std::string& stage() const { return stage_; }

  private:
    std::string stage_;
};

/// Detect, warp under a sampled family, measure ground-truth detection
/// errors, prune, match both detectors with the instrumented matcher, check
/// equivalence, and account costs. Returns one consolidated report.
inline nlohmann::json run_pipeline(const PipelineConfig& cfg,
                                   const std::function<void(const std::string&)>& on_stage = {}) {
    std::string stage = "config";
    const auto enter = [&](const std::string& name) {
        stage = name;
        if (on_stage) on_stage(name);
    };
    try {
        if (!(cfg.epsilon_d > 0.0)) throw parameter_error("epsilon_d must be positive");
        if (cfg.n_transforms == 0) throw parameter_error("need at least one transform");
        if (cfg.threads < 1) throw parameter_error("threads must be at least 1");
        if (cfg.delta_d.has_value() && *cfg.delta_d < 0.0)
            throw parameter_error("delta_d must be nonnegative");
        cfg.detector.validate();
        cfg.descriptor.validate();
        cfg.ranges.validate();

        enter("load");
        const Image img = load_image(cfg.image_path);

        enter("detect");
        const InterestPointSet src = detect(cfg.detector_id, img, cfg.detector);

        enter("sample_transforms");
        const Point center{(img.width() - 1) / 2.0, (img.height() - 1) / 2.0};
        TransformSampler sampler(cfg.family, cfg.ranges, cfg.seed, center);
        const std::vector<Transform> transforms = sampler.sample(cfg.n_transforms);

        enter("warp_redetect");
        std::vector<InterestPointSet> dst(cfg.n_transforms);
        Image first_warp(1, 1);
        for (std::size_t k = 0; k < cfg.n_transforms; ++k) {
            Image warped = warp(img, transforms[k]);
            dst[k] = detect(cfg.detector_id, warped, cfg.detector);
            if (k == 0) first_warp = std::move(warped);
        }

        enter("detection_error");
        std::vector<DetectionErrorMap> errors(cfg.n_transforms);
        for (std::size_t k = 0; k < cfg.n_transforms; ++k) {
            if (dst[k].empty()) {
                // nothing re-detected: every point is unobserved under this transform
                errors[k].transform_id = transform_id(transforms[k]);
                errors[k].errors.assign(src.size(), std::nullopt);
            } else {
                errors[k] = detection_error(src, dst[k], transforms[k]);
            }
        }

        enter("calibrate");
        std::optional<CalibrationResult> calibration;
        double delta_d = 0.0;
        if (cfg.delta_d.has_value()) {
            delta_d = *cfg.delta_d;
        } else {
            // the sampler continues its stream; calibration draws fresh transforms
            calibration = estimate_delta_d(img, sampler, cfg.n_transforms, cfg.descriptor, src,
                                           cfg.epsilon_d, OffsetGrid::make(), cfg.percentile);
            delta_d = calibration->delta_d;
        }

        enter("prune");
        std::vector<PruneResult> per_transform(cfg.n_transforms);
        for (std::size_t k = 0; k < cfg.n_transforms; ++k)
            per_transform[k] = prune(src, errors[k], delta_d);

        // Family-level ground truth: worst observed error per point; points
        // never observed in-domain count as redundant.
        DetectionErrorMap family_map;
        family_map.transform_id = "family_max";
        family_map.errors.assign(src.size(), std::nullopt);
        std::vector<double> mean_error(src.size(), 0.0);
        std::vector<std::size_t> observations(src.size(), 0);
        for (std::size_t k = 0; k < cfg.n_transforms; ++k)
            for (std::size_t i = 0; i < src.size(); ++i) {
                const auto& e = errors[k].errors[i];
                if (!e.has_value()) continue;
                ++observations[i];
                mean_error[i] += *e;
                if (!family_map.errors[i].has_value() || *e > *family_map.errors[i])
                    family_map.errors[i] = *e;
            }
        for (std::size_t i = 0; i < src.size(); ++i)
            if (observations[i] > 0) mean_error[i] /= static_cast<double>(observations[i]);
        const PruneResult family_prune = prune(src, family_map, delta_d);
        std::vector<bool> redundant(src.size());
        for (std::size_t i = 0; i < src.size(); ++i)
            redundant[i] = observations[i] == 0 || *family_map.errors[i] > delta_d;

        enter("match");
        const DescriptorField src_field(img, cfg.descriptor);
        auto [src_sub, src_idx] = detail::describable_subset(src, src_field);
        auto [pruned_sub, pruned_idx] =
            detail::describable_subset(family_prune.retained, src_field);
        const DescriptorField dst_field(first_warp, cfg.descriptor);
        auto [dst_sub, dst_idx] = detail::describable_subset(dst[0], dst_field);
        const auto src_desc = detail::describe_all(src_field, src_sub);
        const auto pruned_desc = detail::describe_all(src_field, pruned_sub);
        const auto dst_desc = detail::describe_all(dst_field, dst_sub);
        MatchResult full_match;
        MatchResult pruned_match;
        if (!src_desc.empty() && !dst_desc.empty())
            full_match =
                match_by_descriptor(src_desc, dst_desc, cfg.epsilon_d, MatchMode::threshold);
        if (!pruned_desc.empty() && !dst_desc.empty())
            pruned_match =
                match_by_descriptor(pruned_desc, dst_desc, cfg.epsilon_d, MatchMode::threshold);

        enter("equivalence");
        std::vector<bool> equivalent(cfg.n_transforms);
        bool all_equivalent = true;
        for (std::size_t k = 0; k < cfg.n_transforms; ++k) {
            const EquivalenceContext ctx{dst[k], transforms[k], delta_d};
            equivalent[k] = verify_equivalence(src, per_transform[k].retained, ctx);
            all_equivalent = all_equivalent && equivalent[k];
        }

        enter("cost");
        const CostReport cost = cost_report(src.size(), family_prune.removed.size(),
                                            full_match.metric_evaluations);

        enter("registration");
        const TransformKind model = detail::fit_model(cfg.family);
        std::optional<RegistrationReport> registration;
        std::optional<ApproximationError> approximation;
        if (!dst[0].empty() && !family_prune.retained.empty()) {
            const CorrespondenceSet gt = ground_truth_correspondences(
                family_prune.retained, dst[0], transforms[0], delta_d);
            if (gt.pairs.size() >= detail::min_pairs(model)) {
                try {
                    registration =
                        estimate_transform(gt, family_prune.retained, dst[0], model);
                    approximation = approximation_error(registration->estimated, transforms[0],
                                                        img.width(), img.height(), 1.0);
                } catch (const degeneracy_error&) {
                    registration.reset(); // degenerate geometry: report no registration
                }
            }
        }

        enter("report");
        nlohmann::json per_point = nlohmann::json::array();
        for (std::size_t i = 0; i < src.size(); ++i) {
            nlohmann::json row = {{"index", i},
                                  {"x", detail::real(src.points[i].location.x)},
                                  {"y", detail::real(src.points[i].location.y)},
                                  {"response", detail::real(src.points[i].response)},
                                  {"observations", observations[i]},
                                  {"redundant", static_cast<bool>(redundant[i])}};
            if (observations[i] > 0) {
                row["mean_error"] = detail::real(mean_error[i]);
                row["max_error"] = detail::real(*family_map.errors[i]);
            } else {
                row["mean_error"] = nullptr;
                row["max_error"] = nullptr;
            }
            per_point.push_back(std::move(row));
        }

        nlohmann::json transform_rows = nlohmann::json::array();
        for (std::size_t k = 0; k < cfg.n_transforms; ++k) {
            transform_rows.push_back(
                {{"index", k},
                 {"transform", transforms[k]},
                 {"transform_id", transform_id(transforms[k])},
                 {"detected", dst[k].size()},
                 {"errors", errors[k]},
                 {"removed", per_transform[k].removed.size()},
                 {"achieved_correctness", detail::real(per_transform[k].achieved_correctness)},
                 {"equivalent", static_cast<bool>(equivalent[k])}});
        }

        nlohmann::json report = {
            {"schema", "pipeline_report/1"},
            {"config", cfg},
            {"image", {{"width", img.width()}, {"height", img.height()}}},
            {"detection", {{"count", src.size()}, {"points", src}}},
            {"transforms", transform_rows},
            {"calibration",
             calibration.has_value() ? nlohmann::json(*calibration) : nlohmann::json(nullptr)},
            {"delta_d", detail::real(delta_d)},
            {"ground_truth", {{"delta_d", detail::real(delta_d)}, {"points", per_point}}},
            {"prune", family_prune},
            {"matching",
             {{"epsilon_d", detail::real(cfg.epsilon_d)},
              {"mode", "threshold"},
              {"described_original", src_desc.size()},
              {"described_pruned", pruned_desc.size()},
              {"described_target", dst_desc.size()},
              {"measured_full", full_match.metric_evaluations},
              {"measured_pruned", pruned_match.metric_evaluations},
              {"matches_full", full_match.matches.pairs.size()},
              {"matches_pruned", pruned_match.matches.pairs.size()}}},
            {"equivalence", {{"per_transform", equivalent}, {"all", all_equivalent}}},
            {"cost", cost},
            {"registration", registration.has_value() ? nlohmann::json(*registration)
                                                      : nlohmann::json(nullptr)},
            {"approximation", approximation.has_value() ? nlohmann::json(*approximation)
                                                        : nlohmann::json(nullptr)}};
        return report;
    } catch (const std::exception& e) {
        throw pipeline_failure(stage, e.what());
    }
}

struct CsvTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Tabular sections of a pipeline report, derived from the report JSON so
/// the report command and a csv-format pipeline run emit identical tables.
inline std::vector<CsvTable> pipeline_csv_tables(const nlohmann::json& report) {
    std::vector<CsvTable> tables;

    CsvTable points{"points",
                    {"index", "x", "y", "response", "mean_error", "max_error", "observations",
                     "redundant"},
                    {}};
    for (const auto& row : report.at("ground_truth").at("points")) {
        const auto opt_num = [&](const char* key) -> std::string {
            return row.at(key).is_null() ? std::string() : csv_number(row.at(key).get<double>());
        };
        points.rows.push_back({std::to_string(row.at("index").get<std::size_t>()),
                               csv_number(row.at("x").get<double>()),
                               csv_number(row.at("y").get<double>()),
                               csv_number(row.at("response").get<double>()), opt_num("mean_error"),
                               opt_num("max_error"),
                               std::to_string(row.at("observations").get<std::size_t>()),
                               row.at("redundant").get<bool>() ? "1" : "0"});
    }
    tables.push_back(std::move(points));

    CsvTable trows{"transforms",
                   {"index", "transform_id", "detected", "removed", "achieved_correctness",
                    "equivalent"},
                   {}};
    for (const auto& row : report.at("transforms")) {
        trows.rows.push_back({std::to_string(row.at("index").get<std::size_t>()),
                              row.at("transform_id").get<std::string>(),
                              std::to_string(row.at("detected").get<std::size_t>()),
                              std::to_string(row.at("removed").get<std::size_t>()),
                              csv_number(row.at("achieved_correctness").get<double>()),
                              row.at("equivalent").get<bool>() ? "1" : "0"});
    }
    tables.push_back(std::move(trows));

    const auto& cost = report.at("cost");
    tables.push_back({"cost",
                      {"n", "n_star", "cost_full", "cost_pruned", "savings",
                       "measured_evaluations"},
                      {{std::to_string(cost.at("n").get<std::uint64_t>()),
                        std::to_string(cost.at("n_star").get<std::uint64_t>()),
                        std::to_string(cost.at("cost_full").get<std::uint64_t>()),
                        std::to_string(cost.at("cost_pruned").get<std::uint64_t>()),
                        std::to_string(cost.at("savings").get<std::uint64_t>()),
                        std::to_string(cost.at("measured_evaluations").get<std::uint64_t>())}}});

    CsvTable reg{"registration",
                 {"model", "n_correspondences", "rms_error", "max_error", "approx_rms",
                  "approx_max"},
                 {}};
    if (!report.at("registration").is_null()) {
        const auto& r = report.at("registration");
        const auto& a = report.at("approximation");
        reg.rows.push_back({r.at("model").get<std::string>(),
                            std::to_string(r.at("n_correspondences").get<std::size_t>()),
                            csv_number(r.at("rms_error").get<double>()),
                            csv_number(r.at("max_error").get<double>()),
                            a.is_null() ? std::string() : csv_number(a.at("rms").get<double>()),
                            a.is_null() ? std::string() : csv_number(a.at("max").get<double>())});
    }
    tables.push_back(std::move(reg));
    return tables;
}

struct ConfusionMatrix {
    std::size_t tp = 0; // predicted redundant, labeled redundant
    std::size_t fp = 0; // predicted redundant, labeled correct
    std::size_t tn = 0;
    std::size_t fn = 0;

    double agreement() const {
        const std::size_t total = tp + fp + tn + fn;
        return total == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total);
    }
};

inline ConfusionMatrix confusion(const std::vector<bool>& predicted,
                                 const std::vector<bool>& labels) {
    if (predicted.size() != labels.size())
        throw consistency_error("confusion: prediction/label count mismatch");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (predicted[i] && labels[i]) ++m.tp;
        else if (predicted[i] && !labels[i]) ++m.fp;
        else if (!predicted[i] && labels[i]) ++m.fn;
        else ++m.tn;
    }
    return m;
}

inline void to_json(nlohmann::json& j, const ConfusionMatrix& m) {
    j = {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn},
         {"agreement", detail::real(m.agreement())}};
}

namespace detail {

inline nlohmann::json estimator_section(const ErrorEstimate& est, const std::vector<bool>& labels) {
    const auto predicted = predicted_redundant(est);
    nlohmann::json roc = nlohmann::json::array();
    for (const auto& pt : roc_curve(est.scores, labels))
        roc.push_back({{"threshold", real(pt.threshold)},
                       {"tpr", real(pt.tpr)},
                       {"fpr", real(pt.fpr)}});
    return {{"estimate", est},
            {"confusion", confusion(predicted, labels)},
            {"auc", real(auc(est.scores, labels))},
            {"roc", roc}};
}

inline std::vector<std::size_t> shuffled(std::vector<std::size_t> idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.integer(0, i - 1)]);
    return idx;
}

} // namespace detail

/// Evaluates the three indirect estimators plus a seeded random baseline
/// against a pipeline report's ground-truth redundancy labels. Points too
/// close to the border for the Laplacian are excluded so every estimator is
/// scored on the same subset.
inline nlohmann::json run_estimators(const nlohmann::json& pipeline_report,
                                     std::optional<std::uint64_t> seed_override = std::nullopt,
                                     std::optional<double> laplacian_delta_hat = std::nullopt) {
    if (!pipeline_report.contains("schema") ||
        pipeline_report.at("schema").get<std::string>() != "pipeline_report/1")
        throw format_error("run_estimators: not a pipeline report");
    const PipelineConfig cfg = pipeline_report.at("config").get<PipelineConfig>();
    const double delta_d = pipeline_report.at("delta_d").get<double>();
    const std::uint64_t seed = seed_override.value_or(cfg.seed);

    const Image img = load_image(cfg.image_path);
    const InterestPointSet pts = detect(cfg.detector_id, img, cfg.detector);
    const auto& rows = pipeline_report.at("ground_truth").at("points");
    if (rows.size() != pts.size())
        throw consistency_error(
            "run_estimators: point count differs from the report (image or params changed)");
    std::vector<bool> labels_all(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        labels_all[i] = rows.at(i).at("redundant").get<bool>();

    // Common evaluation subset: points with valid Laplacian support.
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point& p = pts.points[i].location;
        if (p.x >= 1.0 && p.y >= 1.0 && p.x <= img.width() - 2.0 && p.y <= img.height() - 2.0)
            keep.push_back(i);
    }
    InterestPointSet eval = pts;
    eval.points.clear();
    std::vector<bool> labels;
    for (std::size_t i : keep) {
        eval.points.push_back(pts.points[i]);
        labels.push_back(labels_all[i]);
    }
    std::size_t n_redundant = 0;
    for (bool b : labels) n_redundant += b ? 1 : 0;
    if (n_redundant == 0 || n_redundant == labels.size())
        throw degenerate_data_error("run_estimators: ground truth has a single class");

    // Sampling estimator, re-drawing the report's transform sequence.
    TransformSampler sampler(cfg.family, cfg.ranges, cfg.seed,
                             {(img.width() - 1) / 2.0, (img.height() - 1) / 2.0});
    ErrorEstimate sampling_full =
        sampling_estimator(img, cfg.detector_id, cfg.detector, sampler, cfg.n_transforms, delta_d);
    ErrorEstimate sampling;
    sampling.estimator_id = sampling_full.estimator_id;
    sampling.threshold = sampling_full.threshold;
    for (std::size_t i : keep) sampling.scores.push_back(sampling_full.scores[i]);

    // Laplacian estimator; the threshold comes from the flag or Youden's J.
    ErrorEstimate lap = laplacian_estimator(img, eval, 0.0);
    const double delta_hat = laplacian_delta_hat.value_or(-youden_threshold(lap.scores, labels));
    lap.threshold = -delta_hat;

    // Learned estimator on a stratified split; positive class = stays correct.
    const auto features = stability_features(img, eval);
    std::vector<std::size_t> pos_idx, neg_idx; // by "correct" class
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] ? neg_idx : pos_idx).push_back(i);
    Rng split_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::string split_mode = "stratified";
    std::vector<std::size_t> train_idx, test_idx;
    if (pos_idx.size() < 4 || neg_idx.size() < 4) {
        split_mode = "none"; // too few per class to hold anything out
        train_idx.resize(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) train_idx[i] = i;
        test_idx = train_idx;
    } else {
        for (auto* cls : {&pos_idx, &neg_idx}) {
            const auto order = detail::shuffled(*cls, split_rng);
            const std::size_t half = order.size() / 2;
            train_idx.insert(train_idx.end(), order.begin(), order.begin() + half);
            test_idx.insert(test_idx.end(), order.begin() + half, order.end());
        }
        std::sort(train_idx.begin(), train_idx.end());
        std::sort(test_idx.begin(), test_idx.end());
    }
    std::vector<std::vector<double>> train_x, test_x;
    std::vector<bool> train_y, test_y;
    for (std::size_t i : train_idx) {
        train_x.push_back(features[i]);
        train_y.push_back(!labels[i]);
    }
    for (std::size_t i : test_idx) {
        test_x.push_back(features[i]);
        test_y.push_back(labels[i]); // redundancy labels for evaluation
    }
    LearnedConfig lc;
    lc.seed = seed;
    LearnedModel model = train_learned_estimator(train_x, train_y, lc);
    model.feature_names = {"abs_laplacian", "response", "local_variance", "jet2_magnitude"};
    const ErrorEstimate learned = predict_learned(model, test_x);
    std::size_t train_hits = 0;
    for (std::size_t k = 0; k < train_x.size(); ++k)
        if ((learned_probability(model, train_x[k]) >= 0.5) == train_y[k]) ++train_hits;

    // Seeded random baseline over the same subset.
    Rng noise_rng(seed + 977);
    ErrorEstimate baseline;
    baseline.estimator_id = "random";
    baseline.threshold = 0.5;
    for (std::size_t i = 0; i < labels.size(); ++i) baseline.scores.push_back(noise_rng.uniform());

    nlohmann::json out = {
        {"schema", "estimator_report/1"},
        {"delta_d", detail::real(delta_d)},
        {"seed", seed},
        {"labels",
         {{"evaluated", labels.size()},
          {"excluded_border", pts.size() - labels.size()},
          {"redundant", n_redundant},
          {"correct", labels.size() - n_redundant}}},
        {"estimators",
         {{"sampling", detail::estimator_section(sampling, labels)},
          {"laplacian", detail::estimator_section(lap, labels)},
          {"learned", detail::estimator_section(learned, test_y)},
          {"random_baseline", detail::estimator_section(baseline, labels)}}}};
    out["estimators"]["laplacian"]["delta_hat"] = detail::real(delta_hat);
    out["estimators"]["laplacian"]["delta_hat_source"] =
        laplacian_delta_hat.has_value() ? "flag" : "youden";
    out["estimators"]["learned"]["model"] = model;
    out["estimators"]["learned"]["split"] = {{"mode", split_mode},
                                             {"train", train_idx.size()},
                                             {"test", test_idx.size()}};
    out["estimators"]["learned"]["train_accuracy"] = detail::real(
        train_x.empty() ? 0.0 : static_cast<double>(train_hits) / train_x.size());
    return out;
}

} // namespace ipkit
