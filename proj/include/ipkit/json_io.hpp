#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipkit/calibrate.hpp"
#include "ipkit/correspond.hpp"
#include "ipkit/describe.hpp"
#include "ipkit/detect.hpp"
#include "ipkit/errors.hpp"
#include "ipkit/evaluate.hpp"
#include "ipkit/image.hpp"
#include "ipkit/irredundant.hpp"

namespace ipkit {

/// Rounds to 9 significant decimal digits, the precision every stored real
/// carries. Applying it again is a no-op, so written files parse back to the
/// exact doubles they were written from.
inline double round_sig(double v) {
    if (!std::isfinite(v)) throw consistency_error("round_sig: non-finite value");
    if (v == 0.0) return 0.0;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.8e", v);
    return std::strtod(buf, nullptr);
}

namespace detail {

inline nlohmann::json real(double v) { return round_sig(v); }

inline nlohmann::json real_list(const std::vector<double>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (double x : v) arr.push_back(real(x));
    return arr;
}

inline std::vector<double> real_list_from(const nlohmann::json& j) {
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& x : j) out.push_back(x.get<double>());
    return out;
}

} // namespace detail

inline std::string kind_name(DescriptorKind k) {
    return k == DescriptorKind::njet ? "njet" : "patch";
}

inline DescriptorKind descriptor_kind_from_name(const std::string& name) {
    if (name == "njet") return DescriptorKind::njet;
    if (name == "patch") return DescriptorKind::patch;
    throw parameter_error("unknown descriptor kind: " + name);
}

inline std::string kind_name(TransformKind k) {
    return k == TransformKind::similarity ? "similarity" : "affine";
}

inline TransformKind transform_kind_from_name(const std::string& name) {
    if (name == "similarity") return TransformKind::similarity;
    if (name == "affine") return TransformKind::affine;
    throw parameter_error("unknown transform kind: " + name);
}

inline std::string kind_name(CorrespondenceKind k) {
    return k == CorrespondenceKind::ground_truth ? "ground_truth" : "descriptor_matched";
}

inline CorrespondenceKind correspondence_kind_from_name(const std::string& name) {
    if (name == "ground_truth") return CorrespondenceKind::ground_truth;
    if (name == "descriptor_matched") return CorrespondenceKind::descriptor_matched;
    throw parameter_error("unknown correspondence kind: " + name);
}

inline void to_json(nlohmann::json& j, const Point& p) {
    j = {{"x", detail::real(p.x)}, {"y", detail::real(p.y)}};
}
inline void from_json(const nlohmann::json& j, Point& p) {
    p.x = j.at("x").get<double>();
    p.y = j.at("y").get<double>();
}

inline void to_json(nlohmann::json& j, const Transform& t) {
    j = {{"kind", kind_name(t.kind)},
         {"matrix", {{detail::real(t.matrix[0][0]), detail::real(t.matrix[0][1])},
                     {detail::real(t.matrix[1][0]), detail::real(t.matrix[1][1])}}},
         {"translation", {detail::real(t.translation[0]), detail::real(t.translation[1])}}};
}
inline void from_json(const nlohmann::json& j, Transform& t) {
    t.kind = transform_kind_from_name(j.at("kind").get<std::string>());
    const auto& m = j.at("matrix");
    t.matrix = {{{m.at(0).at(0).get<double>(), m.at(0).at(1).get<double>()},
                 {m.at(1).at(0).get<double>(), m.at(1).at(1).get<double>()}}};
    t.translation = {j.at("translation").at(0).get<double>(),
                     j.at("translation").at(1).get<double>()};
}

inline void to_json(nlohmann::json& j, const DetectorParams& p) {
    j = {{"smoothing_sigma", detail::real(p.smoothing_sigma)},
         {"response_threshold", detail::real(p.response_threshold)},
         {"nms_radius", detail::real(p.nms_radius)},
         {"max_points", p.max_points}};
}
inline void from_json(const nlohmann::json& j, DetectorParams& p) {
    p.smoothing_sigma = j.at("smoothing_sigma").get<double>();
    p.response_threshold = j.at("response_threshold").get<double>();
    p.nms_radius = j.at("nms_radius").get<double>();
    p.max_points = j.at("max_points").get<int>();
}

inline void to_json(nlohmann::json& j, const InterestPoint& p) {
    j = {{"x", detail::real(p.location.x)},
         {"y", detail::real(p.location.y)},
         {"response", detail::real(p.response)},
         {"scale", detail::real(p.scale)}};
}
inline void from_json(const nlohmann::json& j, InterestPoint& p) {
    p.location.x = j.at("x").get<double>();
    p.location.y = j.at("y").get<double>();
    p.response = j.at("response").get<double>();
    p.scale = j.at("scale").get<double>();
}

inline void to_json(nlohmann::json& j, const InterestPointSet& s) {
    j = {{"detector_id", s.detector_id},
         {"params", s.params},
         {"domain", {{"width", s.domain_width}, {"height", s.domain_height}}},
         {"points", s.points}};
}
inline void from_json(const nlohmann::json& j, InterestPointSet& s) {
    s.detector_id = j.at("detector_id").get<std::string>();
    s.params = j.at("params").get<DetectorParams>();
    s.domain_width = j.at("domain").at("width").get<int>();
    s.domain_height = j.at("domain").at("height").get<int>();
    s.points = j.at("points").get<std::vector<InterestPoint>>();
}

inline void to_json(nlohmann::json& j, const DescriptorParams& p) {
    j = {{"kind", kind_name(p.kind)},
         {"sigma", detail::real(p.sigma)},
         {"order", p.order},
         {"radius", p.radius},
         {"normalize", p.normalize}};
}
inline void from_json(const nlohmann::json& j, DescriptorParams& p) {
    p.kind = descriptor_kind_from_name(j.at("kind").get<std::string>());
    p.sigma = j.at("sigma").get<double>();
    p.order = j.at("order").get<int>();
    p.radius = j.at("radius").get<int>();
    p.normalize = j.at("normalize").get<bool>();
}

/// Descriptor vectors as one document: the id and params ride alongside the
/// raw arrays so a reader can refuse incompatible pairings.
inline nlohmann::json descriptors_to_json(const std::vector<DescriptorVector>& descs,
                                          const DescriptorParams& params) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : descs) {
        if (d.descriptor_id != params.id())
            throw incompatibility_error("descriptors_to_json: id mismatch with params");
        arr.push_back(detail::real_list(d.values));
    }
    return {{"descriptor_id", params.id()}, {"params", params}, {"descriptors", arr}};
}

inline std::vector<DescriptorVector> descriptors_from_json(const nlohmann::json& j) {
    const std::string id = j.at("descriptor_id").get<std::string>();
    std::vector<DescriptorVector> out;
    for (const auto& row : j.at("descriptors"))
        out.push_back({detail::real_list_from(row), id});
    return out;
}

inline void to_json(nlohmann::json& j, const CorrespondenceSet& s) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [a, b] : s.pairs) pairs.push_back({a, b});
    j = {{"kind", kind_name(s.kind)}, {"pairs", pairs}};
}
inline void from_json(const nlohmann::json& j, CorrespondenceSet& s) {
    s.kind = correspondence_kind_from_name(j.at("kind").get<std::string>());
    s.pairs.clear();
    for (const auto& row : j.at("pairs"))
        s.pairs.emplace_back(row.at(0).get<std::size_t>(), row.at(1).get<std::size_t>());
}

inline void to_json(nlohmann::json& j, const DetectionErrorMap& m) {
    nlohmann::json errs = nlohmann::json::array();
    for (const auto& e : m.errors) {
        if (e.has_value()) errs.push_back(detail::real(*e));
        else errs.push_back(nullptr);
    }
    j = {{"transform_id", m.transform_id}, {"errors", errs}};
}
inline void from_json(const nlohmann::json& j, DetectionErrorMap& m) {
    m.transform_id = j.at("transform_id").get<std::string>();
    m.errors.clear();
    for (const auto& e : j.at("errors")) {
        if (e.is_null()) m.errors.push_back(std::nullopt);
        else m.errors.push_back(e.get<double>());
    }
}

inline void to_json(nlohmann::json& j, const RemovedPoint& r) {
    j = {{"point", r.point}, {"off_domain", r.off_domain}};
    if (r.error.has_value()) j["error"] = detail::real(*r.error);
    else j["error"] = nullptr;
}
inline void from_json(const nlohmann::json& j, RemovedPoint& r) {
    r.point = j.at("point").get<InterestPoint>();
    r.off_domain = j.at("off_domain").get<bool>();
    if (j.at("error").is_null()) r.error = std::nullopt;
    else r.error = j.at("error").get<double>();
}

inline void to_json(nlohmann::json& j, const PruneResult& p) {
    j = {{"retained", p.retained},
         {"retained_errors", detail::real_list(p.retained_errors)},
         {"removed", p.removed},
         {"achieved_correctness", detail::real(p.achieved_correctness)},
         {"delta_d", detail::real(p.delta_d)}};
}
inline void from_json(const nlohmann::json& j, PruneResult& p) {
    p.retained = j.at("retained").get<InterestPointSet>();
    p.retained_errors = detail::real_list_from(j.at("retained_errors"));
    p.removed = j.at("removed").get<std::vector<RemovedPoint>>();
    p.achieved_correctness = j.at("achieved_correctness").get<double>();
    p.delta_d = j.at("delta_d").get<double>();
}

inline void to_json(nlohmann::json& j, const CalibrationResult& c) {
    j = {{"epsilon_d", detail::real(c.epsilon_d)},
         {"delta_d", detail::real(c.delta_d)},
         {"descriptor_id", c.descriptor_id},
         {"transform_family", c.transform_family},
         {"sample_count", c.sample_count},
         {"percentile", detail::real(c.percentile)},
         {"achieved", c.achieved}};
}
inline void from_json(const nlohmann::json& j, CalibrationResult& c) {
    c.epsilon_d = j.at("epsilon_d").get<double>();
    c.delta_d = j.at("delta_d").get<double>();
    c.descriptor_id = j.at("descriptor_id").get<std::string>();
    c.transform_family = j.at("transform_family").get<std::string>();
    c.sample_count = j.at("sample_count").get<std::size_t>();
    c.percentile = j.at("percentile").get<double>();
    c.achieved = j.at("achieved").get<bool>();
}

inline void to_json(nlohmann::json& j, const ErrorEstimate& e) {
    j = {{"scores", detail::real_list(e.scores)},
         {"threshold", detail::real(e.threshold)},
         {"estimator_id", e.estimator_id}};
}
inline void from_json(const nlohmann::json& j, ErrorEstimate& e) {
    e.scores = detail::real_list_from(j.at("scores"));
    e.threshold = j.at("threshold").get<double>();
    e.estimator_id = j.at("estimator_id").get<std::string>();
}

inline void to_json(nlohmann::json& j, const LearnedModel& m) {
    j = {{"weights", detail::real_list(m.weights)},
         {"bias", detail::real(m.bias)},
         {"feature_means", detail::real_list(m.feature_means)},
         {"feature_stds", detail::real_list(m.feature_stds)},
         {"feature_names", m.feature_names},
         {"seed", m.seed},
         {"loss_trace", detail::real_list(m.loss_trace)}};
}
inline void from_json(const nlohmann::json& j, LearnedModel& m) {
    m.weights = detail::real_list_from(j.at("weights"));
    m.bias = j.at("bias").get<double>();
    m.feature_means = detail::real_list_from(j.at("feature_means"));
    m.feature_stds = detail::real_list_from(j.at("feature_stds"));
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.loss_trace = detail::real_list_from(j.at("loss_trace"));
}

inline void to_json(nlohmann::json& j, const CostReport& c) {
    j = {{"n", c.n},
         {"n_star", c.n_star},
         {"cost_full", c.cost_full},
         {"cost_pruned", c.cost_pruned},
         {"savings", c.savings},
         {"measured_evaluations", c.measured_evaluations}};
}
inline void from_json(const nlohmann::json& j, CostReport& c) {
    c.n = j.at("n").get<std::uint64_t>();
    c.n_star = j.at("n_star").get<std::uint64_t>();
    c.cost_full = j.at("cost_full").get<std::uint64_t>();
    c.cost_pruned = j.at("cost_pruned").get<std::uint64_t>();
    c.savings = j.at("savings").get<std::uint64_t>();
    c.measured_evaluations = j.at("measured_evaluations").get<std::uint64_t>();
}

inline void to_json(nlohmann::json& j, const RegistrationReport& r) {
    j = {{"model", kind_name(r.model)},
         {"estimated", r.estimated},
         {"rms_error", detail::real(r.rms_error)},
         {"max_error", detail::real(r.max_error)},
         {"n_correspondences", r.n_correspondences}};
}
inline void from_json(const nlohmann::json& j, RegistrationReport& r) {
    r.model = transform_kind_from_name(j.at("model").get<std::string>());
    r.estimated = j.at("estimated").get<Transform>();
    r.rms_error = j.at("rms_error").get<double>();
    r.max_error = j.at("max_error").get<double>();
    r.n_correspondences = j.at("n_correspondences").get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const ApproximationError& a) {
    j = {{"rms", detail::real(a.rms)}, {"max", detail::real(a.max)}};
}
inline void from_json(const nlohmann::json& j, ApproximationError& a) {
    a.rms = j.at("rms").get<double>();
    a.max = j.at("max").get<double>();
}

/// Canonical file form: 2-space indent, sorted keys (the default object
/// order), one trailing newline. Byte-identical for equal documents.
inline std::string dump_canonical(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << dump_canonical(j);
    if (!out) throw io_error("write failed: " + path);
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw format_error("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

/// Minimal CSV with RFC-style quoting for commas, quotes, and newlines.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_field(fields[i]);
    }
    out += '\n';
    return out;
}

inline std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", round_sig(v));
    return buf;
}

inline void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << csv_line(header);
    for (const auto& row : rows) out << csv_line(row);
    if (!out) throw io_error("write failed: " + path);
}

} // namespace ipkit
