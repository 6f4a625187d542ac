#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "ipkit/describe.hpp"
#include "ipkit/detect.hpp"
#include "ipkit/errors.hpp"
#include "ipkit/image.hpp"

namespace ipkit {

/// Per-source-point distance from the transformed location to the nearest
/// point of the target set. Entries are absent for points whose image under
/// the transform falls outside the target domain.
struct DetectionErrorMap {
    std::vector<std::optional<double>> errors; // index-aligned with the source set
    std::string transform_id;

    std::size_t size() const { return errors.size(); }
};

enum class CorrespondenceKind { ground_truth, descriptor_matched };

inline const char* to_string(CorrespondenceKind k) {
    return k == CorrespondenceKind::ground_truth ? "ground_truth" : "descriptor_matched";
}

struct CorrespondenceSet {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    CorrespondenceKind kind = CorrespondenceKind::ground_truth;
};

/// Exact nearest-point detection error of each src point under t, brute
/// force over dst.
inline DetectionErrorMap detection_error(const InterestPointSet& src,
                                         const InterestPointSet& dst, const Transform& t) {
    if (dst.empty()) throw parameter_error("detection_error: target set is empty");
    if (std::abs(t.det()) < 1e-12)
        throw singularity_error("detection_error: transform is singular");

    DetectionErrorMap out;
    out.transform_id = transform_id(t);
    out.errors.reserve(src.size());
    for (const auto& ip : src.points) {
        const Point mapped = apply_transform(t, ip.location);
        if (!dst.in_domain(mapped)) {
            out.errors.push_back(std::nullopt);
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : dst.points) best = std::min(best, distance(mapped, q.location));
        out.errors.push_back(best);
    }
    return out;
}

/// Smallest correctness level lambda achieved on this image pair: the
/// maximum present detection error. Returns 0 when every src point maps
/// off-domain; `vacuous`, when supplied, reports that case.
inline double measure_correctness(const InterestPointSet& src, const InterestPointSet& dst,
                                  const Transform& t, bool* vacuous = nullptr) {
    const DetectionErrorMap errs = detection_error(src, dst, t);
    double worst = 0.0;
    bool any = false;
    for (const auto& e : errs.errors)
        if (e) {
            worst = std::max(worst, *e);
            any = true;
        }
    if (vacuous) *vacuous = !any;
    return any ? worst : 0.0;
}

/// All pairs whose transformed source point lands strictly closer than
/// delta_d to the target point. The strict inequality is part of the
/// contract. Source points mapping outside the target domain are excluded,
/// mirroring their missing detection error: a border target point may lie
/// within delta_d of such a location, but no correspondence is defined there.
inline CorrespondenceSet ground_truth_correspondences(const InterestPointSet& src,
                                                      const InterestPointSet& dst,
                                                      const Transform& t, double delta_d) {
    if (delta_d < 0.0)
        throw parameter_error("ground_truth_correspondences: delta_d must be nonnegative");
    CorrespondenceSet out;
    out.kind = CorrespondenceKind::ground_truth;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Point mapped = apply_transform(t, src.points[i].location);
        if (!dst.in_domain(mapped)) continue;
        for (std::size_t j = 0; j < dst.size(); ++j)
            if (distance(mapped, dst.points[j].location) < delta_d) out.pairs.emplace_back(i, j);
    }
    return out;
}

enum class MatchMode { threshold, mutual_nearest };

/// Correspondences plus the exact number of metric evaluations the matcher
/// spent to find them.
struct MatchResult {
    CorrespondenceSet matches;
    std::uint64_t metric_evaluations = 0;
};

namespace detail {

inline void check_descriptor_block(const std::vector<DescriptorVector>& block,
                                   const std::string& id, std::size_t len) {
    for (const auto& d : block) {
        if (d.descriptor_id != id)
            throw incompatibility_error("match: mixed descriptor ids (" + id + " vs " +
                                        d.descriptor_id + ")");
        if (d.values.size() != len)
            throw incompatibility_error("match: mixed descriptor lengths");
    }
}

} // namespace detail

/// Instrumented matcher. Threshold mode keeps every pair with distance
/// <= epsilon_d and always evaluates the full |desc1| x |desc2| matrix;
/// mutual-nearest additionally requires each side to be the other's nearest
/// neighbor (ties resolved toward the lower index).
inline MatchResult match_by_descriptor(const std::vector<DescriptorVector>& desc1,
                                       const std::vector<DescriptorVector>& desc2,
                                       double epsilon_d, MatchMode mode) {
    if (epsilon_d < 0.0) throw parameter_error("match: epsilon_d must be nonnegative");
    if (!desc1.empty() && !desc2.empty()) {
        const std::string& id = desc1.front().descriptor_id;
        const std::size_t len = desc1.front().values.size();
        detail::check_descriptor_block(desc1, id, len);
        detail::check_descriptor_block(desc2, id, len);
    }

    MatchResult out;
    out.matches.kind = CorrespondenceKind::descriptor_matched;

    if (mode == MatchMode::threshold) {
        for (std::size_t i = 0; i < desc1.size(); ++i)
            for (std::size_t j = 0; j < desc2.size(); ++j) {
                const double d = distance(desc1[i], desc2[j]);
                ++out.metric_evaluations;
                if (d <= epsilon_d) out.matches.pairs.emplace_back(i, j);
            }
        return out;
    }

    // Mutual nearest: one full pass over the matrix, cached.
    if (desc1.empty() || desc2.empty()) return out;
    std::vector<std::vector<double>> dist(desc1.size(), std::vector<double>(desc2.size()));
    for (std::size_t i = 0; i < desc1.size(); ++i)
        for (std::size_t j = 0; j < desc2.size(); ++j) {
            dist[i][j] = distance(desc1[i], desc2[j]);
            ++out.metric_evaluations;
        }
    std::vector<std::size_t> nearest_of_1(desc1.size()), nearest_of_2(desc2.size());
    for (std::size_t i = 0; i < desc1.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < desc2.size(); ++j)
            if (dist[i][j] < dist[i][best]) best = j;
        nearest_of_1[i] = best;
    }
    for (std::size_t j = 0; j < desc2.size(); ++j) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < desc1.size(); ++i)
            if (dist[i][j] < dist[best][j]) best = i;
        nearest_of_2[j] = best;
    }
    for (std::size_t i = 0; i < desc1.size(); ++i) {
        const std::size_t j = nearest_of_1[i];
        if (nearest_of_2[j] == i && dist[i][j] <= epsilon_d) out.matches.pairs.emplace_back(i, j);
    }
    return out;
}

} // namespace ipkit
