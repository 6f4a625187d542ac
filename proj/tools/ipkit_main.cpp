#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ipkit/ipkit.hpp"

namespace {

struct DetectorFlags {
    std::string detector_id = "harris";
    ipkit::DetectorParams params;

    void attach(CLI::App* cmd) {
        cmd->add_option("--detector", detector_id, "Detector: harris or log")
            ->check(CLI::IsMember({"harris", "log"}));
        cmd->add_option("--sigma", params.smoothing_sigma, "Detector smoothing sigma");
        cmd->add_option("--threshold", params.response_threshold, "Response threshold");
        cmd->add_option("--nms-radius", params.nms_radius, "Non-maximum suppression radius");
        cmd->add_option("--max-points", params.max_points, "Keep at most this many points");
    }
};

struct DescriptorFlags {
    std::string kind = "njet";
    ipkit::DescriptorParams params;

    void attach(CLI::App* cmd) {
        cmd->add_option("--descriptor", kind, "Descriptor: njet or patch")
            ->check(CLI::IsMember({"njet", "patch"}));
        cmd->add_option("--desc-sigma", params.sigma, "Descriptor smoothing sigma");
        cmd->add_option("--order", params.order, "Jet order (njet)");
        cmd->add_option("--radius", params.radius, "Patch radius (patch)");
        cmd->add_flag("--normalize", params.normalize, "Normalize patch to zero mean, unit std");
    }

    ipkit::DescriptorParams resolved() const {
        ipkit::DescriptorParams p = params;
        p.kind = ipkit::descriptor_kind_from_name(kind);
        return p;
    }
};

struct SamplerFlags {
    std::string family = "similarity";
    ipkit::SamplerRanges ranges;

    void attach(CLI::App* cmd) {
        cmd->add_option("--family", family, "Transform family")
            ->check(CLI::IsMember({"translation", "similarity", "affine"}));
        cmd->add_option("--shift", ranges.shift, "Max |translation| per axis, px");
        cmd->add_option("--angle", ranges.angle, "Max |rotation|, radians");
        cmd->add_option("--scale-min", ranges.scale_min, "Scale lower bound");
        cmd->add_option("--scale-max", ranges.scale_max, "Scale upper bound");
        cmd->add_option("--shear", ranges.shear, "Max |shear| (affine)");
    }
};

void write_tables(const std::string& out_path, const std::vector<ipkit::CsvTable>& tables) {
    const std::size_t dot = out_path.rfind('.');
    const std::string stem = dot == std::string::npos ? out_path : out_path.substr(0, dot);
    for (const auto& t : tables) {
        const std::string path = stem + "." + t.name + ".csv";
        ipkit::write_csv_file(path, t.header, t.rows);
        std::cout << "wrote " << path << "\n";
    }
}

int cmd_detect(const std::string& image, const DetectorFlags& det, const std::string& out) {
    const ipkit::Image img = ipkit::load_image(image);
    const ipkit::InterestPointSet pts = ipkit::detect(det.detector_id, img, det.params);
    ipkit::write_json_file(out, nlohmann::json(pts));
    std::cout << "detected " << pts.size() << " points\n";
    return 0;
}

int cmd_describe(const std::string& image, const std::string& points_path,
                 const DescriptorFlags& desc, const std::string& out) {
    const ipkit::Image img = ipkit::load_image(image);
    const auto pts = ipkit::read_json_file(points_path).get<ipkit::InterestPointSet>();
    const ipkit::DescriptorParams params = desc.resolved();
    const ipkit::DescriptorField field(img, params);
    std::vector<ipkit::DescriptorVector> descs;
    std::vector<std::size_t> indices;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!field.inside_margin(pts.points[i].location)) {
            ++skipped;
            continue;
        }
        descs.push_back(field.at(pts.points[i].location));
        indices.push_back(i);
    }
    nlohmann::json doc = ipkit::descriptors_to_json(descs, params);
    doc["point_indices"] = indices; // rows map to these entries of the point file
    ipkit::write_json_file(out, doc);
    std::cout << "described " << descs.size() << " points (" << skipped << " outside margin)\n";
    return 0;
}

int cmd_match(const std::string& desc1_path, const std::string& desc2_path, double epsilon_d,
              const std::string& mode, const std::string& out) {
    const auto d1 = ipkit::descriptors_from_json(ipkit::read_json_file(desc1_path));
    const auto d2 = ipkit::descriptors_from_json(ipkit::read_json_file(desc2_path));
    const ipkit::MatchMode m = mode == "mutual_nearest" ? ipkit::MatchMode::mutual_nearest
                                                        : ipkit::MatchMode::threshold;
    const ipkit::MatchResult res = ipkit::match_by_descriptor(d1, d2, epsilon_d, m);
    nlohmann::json doc = {{"matches", res.matches},
                          {"metric_evaluations", res.metric_evaluations},
                          {"epsilon_d", ipkit::round_sig(epsilon_d)},
                          {"mode", mode}};
    ipkit::write_json_file(out, doc);
    std::cout << "matched " << res.matches.pairs.size() << " pairs with "
              << res.metric_evaluations << " metric evaluations\n";
    return 0;
}

int cmd_prune(const std::string& points_path, const std::string& errors_path, double delta_d,
              const std::string& out) {
    const auto pts = ipkit::read_json_file(points_path).get<ipkit::InterestPointSet>();
    const auto errs = ipkit::read_json_file(errors_path).get<ipkit::DetectionErrorMap>();
    const ipkit::PruneResult result = ipkit::prune(pts, errs, delta_d);
    ipkit::write_json_file(out, nlohmann::json(result));
    std::cout << "retained " << result.retained.size() << " of " << pts.size()
              << " points (achieved correctness " << result.achieved_correctness << ")\n";
    return 0;
}

int cmd_calibrate(const std::string& image, const DetectorFlags& det, const DescriptorFlags& desc,
                  const SamplerFlags& fam, std::uint64_t seed, std::size_t n_transforms,
                  std::optional<double> epsilon_d, std::optional<double> admissible,
                  double percentile, const std::string& out) {
    if (epsilon_d.has_value() == admissible.has_value())
        throw ipkit::parameter_error(
            "calibrate: pass exactly one of --epsilon-d (delta mode) or --admissible-error "
            "(epsilon mode)");
    const ipkit::Image img = ipkit::load_image(image);
    const ipkit::Point center{(img.width() - 1) / 2.0, (img.height() - 1) / 2.0};
    ipkit::TransformSampler sampler(ipkit::family_from_name(fam.family), fam.ranges, seed, center);
    ipkit::CalibrationResult result;
    if (epsilon_d.has_value()) {
        const ipkit::InterestPointSet pts = ipkit::detect(det.detector_id, img, det.params);
        result = ipkit::estimate_delta_d(img, sampler, n_transforms, desc.resolved(), pts,
                                         *epsilon_d, ipkit::OffsetGrid::make(), percentile);
        std::cout << "delta_d " << result.delta_d << " at epsilon_d " << result.epsilon_d << "\n";
    } else {
        result = ipkit::estimate_epsilon_d(img, sampler, det.detector_id, det.params,
                                           desc.resolved(), *admissible, n_transforms);
        std::cout << "epsilon_d " << result.epsilon_d << " (percentile " << result.percentile
                  << (result.achieved ? ")" : ", target not met)") << "\n";
    }
    ipkit::write_json_file(out, nlohmann::json(result));
    return 0;
}

int cmd_pipeline(ipkit::PipelineConfig cfg, const std::string& out) {
    const nlohmann::json report =
        ipkit::run_pipeline(cfg, [](const std::string& s) { std::cout << "stage " << s << "\n"; });
    ipkit::write_json_file(out, report);
    std::cout << "wrote " << out << "\n";
    if (cfg.format == "csv") write_tables(out, ipkit::pipeline_csv_tables(report));
    return 0;
}

int cmd_estimators(const std::string& ground_truth, std::optional<std::uint64_t> seed,
                   std::optional<double> delta_hat, const std::string& out) {
    if (ground_truth.empty())
        throw ipkit::parameter_error("estimators: --ground-truth report file is required");
    const nlohmann::json report = ipkit::read_json_file(ground_truth);
    const nlohmann::json result = ipkit::run_estimators(report, seed, delta_hat);
    ipkit::write_json_file(out, result);
    const auto& est = result.at("estimators");
    for (const auto& name : {"sampling", "laplacian", "learned", "random_baseline"})
        std::cout << name << " auc " << est.at(name).at("auc").get<double>() << "\n";
    return 0;
}

int cmd_report(const std::string& input, const std::string& out) {
    const nlohmann::json report = ipkit::read_json_file(input);
    if (!report.contains("schema") ||
        report.at("schema").get<std::string>() != "pipeline_report/1")
        throw ipkit::format_error("report: input is not a pipeline report");
    write_tables(out, ipkit::pipeline_csv_tables(report));
    const auto& cost = report.at("cost");
    std::cout << "n " << cost.at("n").get<std::uint64_t>() << ", removed "
              << cost.at("n_star").get<std::uint64_t>() << ", savings "
              << cost.at("savings").get<std::uint64_t>() << ", equivalence "
              << (report.at("equivalence").at("all").get<bool>() ? "true" : "false") << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interest point detection, pruning, and evaluation toolkit"};
    app.require_subcommand(1);

    std::string image, out = "out.json", points_path, errors_path;
    std::string desc1_path, desc2_path, mode = "threshold", ground_truth, input;
    double epsilon_d = 1.0, delta_d = 0.0, percentile = 95.0;
    std::optional<double> opt_epsilon, opt_admissible, opt_delta, opt_delta_hat;
    std::optional<std::uint64_t> opt_seed;
    std::uint64_t seed = 1;
    std::size_t n_transforms = 10;
    int threads = 1;
    std::string format = "json";
    DetectorFlags det;
    DescriptorFlags desc;
    SamplerFlags fam;

    auto* c_detect = app.add_subcommand("detect", "Detect interest points, write them as JSON");
    c_detect->add_option("--image", image, "Input image (PGM or 8-bit grayscale PNG)")
        ->required();
    det.attach(c_detect);
    c_detect->add_option("--out", out, "Output JSON path");

    auto* c_describe = app.add_subcommand("describe", "Describe points from a detect output");
    c_describe->add_option("--image", image, "Input image")->required();
    c_describe->add_option("--points", points_path, "Point set JSON from detect")->required();
    desc.attach(c_describe);
    c_describe->add_option("--out", out, "Output JSON path");

    auto* c_match = app.add_subcommand("match", "Match two descriptor files");
    c_match->add_option("--desc1", desc1_path, "First descriptor JSON")->required();
    c_match->add_option("--desc2", desc2_path, "Second descriptor JSON")->required();
    c_match->add_option("--epsilon-d", epsilon_d, "Descriptor distance threshold")->required();
    c_match->add_option("--mode", mode, "threshold or mutual_nearest")
        ->check(CLI::IsMember({"threshold", "mutual_nearest"}));
    c_match->add_option("--out", out, "Output JSON path");

    auto* c_prune = app.add_subcommand("prune", "Remove points whose detection error exceeds delta_d");
    c_prune->add_option("--points", points_path, "Point set JSON")->required();
    c_prune->add_option("--errors", errors_path, "Detection error map JSON")->required();
    c_prune->add_option("--delta-d", delta_d, "Correctness threshold, px")->required();
    c_prune->add_option("--out", out, "Output JSON path");

    auto* c_calibrate = app.add_subcommand("calibrate", "Estimate delta_d or epsilon_d");
    c_calibrate->add_option("--image", image, "Input image")->required();
    det.attach(c_calibrate);
    desc.attach(c_calibrate);
    fam.attach(c_calibrate);
    c_calibrate->add_option("--seed", seed, "Transform sampler seed");
    c_calibrate->add_option("--n-transforms", n_transforms, "Sampled transforms");
    c_calibrate->add_option("--epsilon-d", opt_epsilon, "Fix epsilon_d and estimate delta_d");
    c_calibrate->add_option("--admissible-error", opt_admissible,
                            "Registration error bound, px; estimate epsilon_d");
    c_calibrate->add_option("--percentile", percentile, "Continuity percentile");
    c_calibrate->add_option("--out", out, "Output JSON path");

    auto* c_pipeline = app.add_subcommand("pipeline", "Full detect/prune/match/verify run");
    c_pipeline->add_option("--image", image, "Input image")->required();
    det.attach(c_pipeline);
    desc.attach(c_pipeline);
    fam.attach(c_pipeline);
    c_pipeline->add_option("--seed", seed, "Transform sampler seed");
    c_pipeline->add_option("--n-transforms", n_transforms, "Sampled transforms");
    c_pipeline->add_option("--delta-d", opt_delta,
                           "Correctness threshold, px; omit to calibrate from the descriptor");
    c_pipeline->add_option("--epsilon-d", epsilon_d, "Descriptor matching threshold")->required();
    c_pipeline->add_option("--percentile", percentile, "Continuity percentile");
    c_pipeline->add_option("--threads", threads, "Worker threads (1 = bit-exact baseline)");
    c_pipeline->add_option("--format", format, "json, or csv to add tables")
        ->check(CLI::IsMember({"json", "csv"}));
    c_pipeline->add_option("--out", out, "Output JSON path");

    auto* c_estimators = app.add_subcommand("estimators",
                                            "Evaluate indirect error estimators against labels");
    c_estimators->add_option("--ground-truth", ground_truth, "Pipeline report JSON")->required();
    c_estimators->add_option("--seed", opt_seed, "Override the evaluation seed");
    c_estimators->add_option("--delta-hat", opt_delta_hat,
                             "Fixed Laplacian threshold (default: Youden's J)");
    c_estimators->add_option("--out", out, "Output JSON path");

    auto* c_report = app.add_subcommand("report", "Export CSV tables from a pipeline report");
    c_report->add_option("--input", input, "Pipeline report JSON")->required();
    c_report->add_option("--out", out, "Output stem for .<table>.csv files");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_detect->parsed()) return cmd_detect(image, det, out);
        if (c_describe->parsed()) return cmd_describe(image, points_path, desc, out);
        if (c_match->parsed()) return cmd_match(desc1_path, desc2_path, epsilon_d, mode, out);
        if (c_prune->parsed()) return cmd_prune(points_path, errors_path, delta_d, out);
        if (c_calibrate->parsed())
            return cmd_calibrate(image, det, desc, fam, seed, n_transforms, opt_epsilon,
                                 opt_admissible, percentile, out);
        if (c_pipeline->parsed()) {
            ipkit::PipelineConfig cfg;
            cfg.image_path = image;
            cfg.detector_id = det.detector_id;
            cfg.detector = det.params;
            cfg.descriptor = desc.resolved();
            cfg.family = ipkit::family_from_name(fam.family);
            cfg.ranges = fam.ranges;
            cfg.seed = seed;
            cfg.n_transforms = n_transforms;
            cfg.delta_d = opt_delta;
            cfg.epsilon_d = epsilon_d;
            cfg.percentile = percentile;
            cfg.threads = threads;
            cfg.format = format;
            return cmd_pipeline(cfg, out);
        }
        if (c_estimators->parsed()) return cmd_estimators(ground_truth, opt_seed, opt_delta_hat, out);
        if (c_report->parsed()) return cmd_report(input, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
