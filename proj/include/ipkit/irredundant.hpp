#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ipkit/correspond.hpp"
#include "ipkit/detect.hpp"
#include "ipkit/errors.hpp"

namespace ipkit {

struct RemovedPoint {
    InterestPoint point;
    std::optional<double> error; // absent when the point mapped off-domain
    bool off_domain = false;
};

/// Outcome of one pruning pass. Valid only for the transform context whose
/// detection errors produced it.
struct PruneResult {
    InterestPointSet retained;
    std::vector<double> retained_errors; // index-aligned with retained
    std::vector<RemovedPoint> removed;
    double achieved_correctness = 0.0;
    double delta_d = 0.0;
};

/// Removes every point whose detection error exceeds delta_d, in one pass.
/// Errors depend only on the fixed target set, so this equals the
/// one-point-at-a-time construction. Points with no error entry (mapped
/// off-domain) are removed and flagged; they can participate in no
/// correspondence. Points with error exactly delta_d stay.
inline PruneResult prune(const InterestPointSet& src, const DetectionErrorMap& errors,
                         double delta_d) {
    if (delta_d < 0.0) throw parameter_error("prune: delta_d must be nonnegative");
    if (errors.size() != src.size())
        throw consistency_error("prune: error map does not match the source set");

    PruneResult out;
    out.delta_d = delta_d;
    out.retained.detector_id = src.detector_id;
    out.retained.params = src.params;
    out.retained.domain_width = src.domain_width;
    out.retained.domain_height = src.domain_height;

    for (std::size_t i = 0; i < src.size(); ++i) {
        const auto& e = errors.errors[i];
        if (!e.has_value()) {
            out.removed.push_back({src.points[i], std::nullopt, true});
        } else if (*e > delta_d) {
            out.removed.push_back({src.points[i], *e, false});
        } else {
            out.retained.points.push_back(src.points[i]);
            out.retained_errors.push_back(*e);
        }
    }
    double worst = 0.0;
    for (double e : out.retained_errors) worst = std::max(worst, e);
    out.achieved_correctness = worst; // 0 when nothing was retained
    return out;
}

namespace detail {

inline bool same_point(const InterestPoint& a, const InterestPoint& b) {
    return a.location.x == b.location.x && a.location.y == b.location.y &&
           a.response == b.response && a.scale == b.scale;
}

} // namespace detail

/// Audits a PruneResult against the set it came from: retained points and
/// removed points partition the original, removed errors exceed delta_d (or
/// the point is flagged off-domain), retained errors stay within delta_d,
/// and the recorded correctness level is their maximum.
inline bool verify_embedding(const InterestPointSet& original, const PruneResult& result) {
    if (result.retained.size() + result.removed.size() != original.size()) return false;
    if (result.retained_errors.size() != result.retained.size()) return false;

    std::vector<bool> used(original.size(), false);
    auto claim = [&](const InterestPoint& p) {
        for (std::size_t i = 0; i < original.size(); ++i)
            if (!used[i] && detail::same_point(original.points[i], p)) {
                used[i] = true;
                return true;
            }
        return false;
    };
    for (const auto& p : result.retained.points)
        if (!claim(p)) return false;
    for (const auto& r : result.removed)
        if (!claim(r.point)) return false;

    for (const auto& r : result.removed) {
        if (r.off_domain) {
            if (r.error.has_value()) return false;
        } else if (!r.error.has_value() || !(*r.error > result.delta_d)) {
            return false;
        }
    }
    double worst = 0.0;
    for (double e : result.retained_errors) {
        if (e > result.delta_d) return false;
        worst = std::max(worst, e);
    }
    return result.achieved_correctness == worst && worst <= result.delta_d;
}

/// Fixed second-image context against which detector outputs are compared:
/// the common target point set, the known transform, and the descriptor's
/// displacement threshold.
struct EquivalenceContext {
    InterestPointSet dst;
    Transform transform;
    double delta_d = 0.0;
};

namespace detail {

/// Ground-truth correspondence pairs as coordinates, sorted, for set
/// comparison across differently indexed point sets.
inline std::vector<std::array<double, 4>> correspondence_coordinates(
    const InterestPointSet& src, const EquivalenceContext& ctx) {
    const CorrespondenceSet rel =
        ground_truth_correspondences(src, ctx.dst, ctx.transform, ctx.delta_d);
    std::vector<std::array<double, 4>> coords;
    coords.reserve(rel.pairs.size());
    for (const auto& [i, j] : rel.pairs)
        coords.push_back({src.points[i].location.x, src.points[i].location.y,
                          ctx.dst.points[j].location.x, ctx.dst.points[j].location.y});
    std::sort(coords.begin(), coords.end());
    return coords;
}

} // namespace detail

/// Whether two detector outputs induce the same ground-truth correspondence
/// set against the shared context, compared by point coordinates.
inline bool verify_equivalence(const InterestPointSet& set_a, const InterestPointSet& set_b,
                               const EquivalenceContext& ctx) {
    return detail::correspondence_coordinates(set_a, ctx) ==
           detail::correspondence_coordinates(set_b, ctx);
}

/// Same check with the fixed-descriptor precondition enforced: every
/// supplied description must come from one descriptor.
inline bool verify_equivalence(const InterestPointSet& set_a, const InterestPointSet& set_b,
                               const std::vector<DescriptorVector>& desc_a,
                               const std::vector<DescriptorVector>& desc_b,
                               const std::vector<DescriptorVector>& desc_dst,
                               const EquivalenceContext& ctx) {
    std::string id;
    for (const auto* block : {&desc_a, &desc_b, &desc_dst})
        for (const auto& d : *block) {
            if (id.empty()) id = d.descriptor_id;
            if (d.descriptor_id != id)
                throw incompatibility_error("verify_equivalence: mixed descriptor ids (" + id +
                                            " vs " + d.descriptor_id + ")");
        }
    return verify_equivalence(set_a, set_b, ctx);
}

struct RelationLawReport {
    std::array<bool, 3> reflexive{};
    std::array<std::array<bool, 3>, 3> equivalent{}; // pairwise outcomes
    bool symmetry_holds = false;
    bool transitivity_holds = false;
    std::vector<std::string> violations;

    bool all_hold() const {
        return reflexive[0] && reflexive[1] && reflexive[2] && symmetry_holds &&
               transitivity_holds;
    }
};

/// Empirical check of the equivalence-relation laws on a triple of detector
/// outputs sharing one context.
inline RelationLawReport check_relation_laws(const std::array<InterestPointSet, 3>& sets,
                                             const EquivalenceContext& ctx) {
    RelationLawReport report;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            report.equivalent[i][j] = verify_equivalence(sets[i], sets[j], ctx);

    for (int i = 0; i < 3; ++i) {
        report.reflexive[i] = report.equivalent[i][i];
        if (!report.reflexive[i])
            report.violations.push_back("reflexivity fails for set " + std::to_string(i));
    }
    report.symmetry_holds = true;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (report.equivalent[i][j] != report.equivalent[j][i]) {
                report.symmetry_holds = false;
                report.violations.push_back("symmetry fails for sets " + std::to_string(i) + "," +
                                            std::to_string(j));
            }
    report.transitivity_holds = true;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                if (i == j || j == k || i == k) continue;
                if (report.equivalent[i][j] && report.equivalent[j][k] &&
                    !report.equivalent[i][k]) {
                    report.transitivity_holds = false;
                    report.violations.push_back("transitivity fails for sets " +
                                                std::to_string(i) + "," + std::to_string(j) + "," +
                                                std::to_string(k));
                }
            }
    return report;
}

} // namespace ipkit
