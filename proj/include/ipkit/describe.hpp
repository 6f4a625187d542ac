#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ipkit/detect.hpp"
#include "ipkit/errors.hpp"
#include "ipkit/image.hpp"

namespace ipkit {

struct DescriptorVector {
    std::vector<double> values;
    std::string descriptor_id;
};

enum class DescriptorKind { njet, patch };

inline const char* to_string(DescriptorKind k) {
    return k == DescriptorKind::njet ? "njet" : "patch";
}

struct DescriptorParams {
    DescriptorKind kind = DescriptorKind::njet;
    double sigma = 2.0;  // njet smoothing scale
    int order = 2;       // njet derivative order, 1..4
    int radius = 3;      // patch half-width, 1..32
    bool normalize = false;

    void validate() const {
        if (kind == DescriptorKind::njet) {
            if (!(sigma > 0.0)) throw parameter_error("DescriptorParams: sigma must be positive");
            if (order < 1 || order > 4)
                throw parameter_error("DescriptorParams: njet order must be in 1..4");
        } else {
            if (radius < 1 || radius > 32)
                throw parameter_error("DescriptorParams: patch radius must be in 1..32");
        }
    }

    /// Stable identifier; distance() refuses vectors whose ids differ.
    std::string id() const {
        std::ostringstream os;
        if (kind == DescriptorKind::njet)
            os << "njet:o" << order << ":s" << sigma;
        else
            os << "patch:r" << radius << (normalize ? ":norm" : ":raw");
        return os.str();
    }

    /// Vector length implied by the parameters.
    std::size_t length() const {
        if (kind == DescriptorKind::njet)
            return static_cast<std::size_t>((order + 1) * (order + 2) / 2);
        const std::size_t side = 2 * static_cast<std::size_t>(radius) + 1;
        return side * side;
    }

    /// Distance from the border below which description is refused. One
    /// extra pixel covers the bilinear footprint; each derivative order eats
    /// one more pixel of valid interior.
    double margin() const {
        if (kind == DescriptorKind::njet)
            return std::ceil(3.0 * sigma) + order + 1;
        return radius + 1;
    }
};

/// Euclidean metric on the description space. Vectors must share both
/// descriptor id and length.
inline double distance(const DescriptorVector& a, const DescriptorVector& b) {
    if (a.descriptor_id != b.descriptor_id)
        throw incompatibility_error("distance: descriptor ids differ (" + a.descriptor_id +
                                    " vs " + b.descriptor_id + ")");
    if (a.values.size() != b.values.size())
        throw incompatibility_error("distance: descriptor lengths differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

/// Descriptor evaluator with the per-image precomputation (smoothing and the
/// derivative stack for the n-jet) done once, so many points on one image
/// are cheap to describe.
class DescriptorField {
public:
    DescriptorField(const Image& img, const DescriptorParams& params)
        : params_(params), id_(params.id()), width_(img.width()), height_(img.height()) {
        params_.validate();
        if (params_.kind == DescriptorKind::njet) {
            // planes_ ordered by total order, x-derivatives first:
            // I, Ix, Iy, Ixx, Ixy, Iyy, ...
            Image smoothed = gaussian_smooth(img, params_.sigma);
            std::vector<Image> prev{smoothed};
            planes_.push_back(smoothed);
            for (int n = 1; n <= params_.order; ++n) {
                std::vector<Image> cur;
                // d^n/dx^a dy^(n-a): differentiate the (a>0 ? x : y) parent.
                for (int b = 0; b <= n; ++b) {
                    const int a = n - b;
                    if (a > 0) {
                        cur.push_back(gradient(prev[b]).first); // d/dx of d^{a-1,b}
                    } else {
                        cur.push_back(gradient(prev[b - 1]).second); // d/dy of d^{0,b-1}
                    }
                }
                for (const auto& plane : cur) planes_.push_back(plane);
                prev = std::move(cur);
            }
        } else {
            planes_.push_back(img);
        }
    }

    const std::string& id() const { return id_; }
    const DescriptorParams& params() const { return params_; }

    bool inside_margin(Point p) const {
        const double m = params_.margin();
        return p.x >= m && p.x <= width_ - 1.0 - m && p.y >= m && p.y <= height_ - 1.0 - m;
    }

    DescriptorVector at(Point p) const {
        if (!inside_margin(p))
            throw margin_error("describe: point too close to the border for this descriptor");
        DescriptorVector out;
        out.descriptor_id = id_;
        if (params_.kind == DescriptorKind::njet) {
            out.values.reserve(planes_.size());
            for (const auto& plane : planes_)
                out.values.push_back(plane.bilinear_zero(p.x, p.y));
        } else {
            const int r = params_.radius;
            out.values.reserve(params_.length());
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    out.values.push_back(planes_[0].bilinear_zero(p.x + dx, p.y + dy));
            if (params_.normalize) {
                double mean = 0.0;
                for (double v : out.values) mean += v;
                mean /= static_cast<double>(out.values.size());
                double var = 0.0;
                for (double v : out.values) var += (v - mean) * (v - mean);
                var /= static_cast<double>(out.values.size());
                if (var == 0.0) {
                    std::fill(out.values.begin(), out.values.end(), 0.0);
                } else {
                    const double inv = 1.0 / std::sqrt(var);
                    for (double& v : out.values) v = (v - mean) * inv;
                }
            }
        }
        return out;
    }

private:
    DescriptorParams params_;
    std::string id_;
    int width_, height_;
    std::vector<Image> planes_;
};

/// One-shot form of DescriptorField::at.
inline DescriptorVector describe(const Image& img, Point pt, const DescriptorParams& params) {
    return DescriptorField(img, params).at(pt);
}

// ---------------------------------------------------------------------------
// Empirical continuity of a descriptor under a known transform.
// ---------------------------------------------------------------------------

/// Displacement radii probed by continuity measurement.
struct OffsetGrid {
    std::vector<double> radii;

    static OffsetGrid make(double min_radius = 0.25, double max_radius = 8.0,
                           double step = 0.25) {
        if (!(step > 0.0) || step > 0.25 + 1e-12)
            throw parameter_error("OffsetGrid: step must be in (0, 0.25]");
        if (min_radius < 0.0 || max_radius < min_radius)
            throw parameter_error("OffsetGrid: bad radius range");
        OffsetGrid g;
        for (int i = 0;; ++i) {
            const double r = min_radius + i * step;
            if (r > max_radius + 1e-12) break;
            g.radii.push_back(std::min(r, max_radius));
        }
        return g;
    }
};

namespace detail {

/// Nearest-rank percentile of an unsorted sample.
inline double percentile_nearest_rank(std::vector<double> values, double pct) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(n)));
    if (rank == 0) rank = 1;
    if (rank > n) rank = n;
    return values[rank - 1];
}

} // namespace detail

struct ContinuitySample {
    double radius = 0.0;
    double percentile_distance = 0.0; // agreed percentile of observed distances
    std::size_t samples = 0;
};

/// For every probe radius, the descriptor distance between a point on the
/// source image and displaced locations around its mapped position on the
/// warped image, summarized at `percentile`. Samples whose descriptors would
/// leave the valid margin are skipped.
inline std::vector<ContinuitySample> continuity_profile(const Image& img, const Transform& t,
                                                        const DescriptorParams& params,
                                                        const InterestPointSet& pts,
                                                        const OffsetGrid& offsets,
                                                        double percentile = 95.0) {
    if (pts.empty()) throw parameter_error("continuity_profile: point set is empty");
    if (offsets.radii.empty()) throw parameter_error("continuity_profile: empty offset grid");

    const Image warped = warp(img, t);
    const DescriptorField src_field(img, params);
    const DescriptorField dst_field(warped, params);

    std::vector<ContinuitySample> profile;
    profile.reserve(offsets.radii.size());
    for (const double r : offsets.radii) {
        std::vector<double> dists;
        for (const auto& ip : pts.points) {
            if (!src_field.inside_margin(ip.location)) continue;
            const DescriptorVector base = src_field.at(ip.location);
            const Point mapped = apply_transform(t, ip.location);
            const int ndir = r == 0.0 ? 1 : 8;
            for (int k = 0; k < ndir; ++k) {
                const double angle = 2.0 * 3.14159265358979323846 * k / 8.0;
                const Point q{mapped.x + r * std::cos(angle), mapped.y + r * std::sin(angle)};
                if (!dst_field.inside_margin(q)) continue;
                dists.push_back(distance(base, dst_field.at(q)));
            }
        }
        ContinuitySample s;
        s.radius = r;
        s.samples = dists.size();
        s.percentile_distance = dists.empty()
                                    ? std::numeric_limits<double>::infinity()
                                    : detail::percentile_nearest_rank(std::move(dists), percentile);
        profile.push_back(s);
    }
    return profile;
}

/// Largest probed radius whose percentile distance stays strictly below
/// epsilon; 0 when no radius qualifies. A radius with no valid samples never
/// qualifies.
inline double continuity_modulus(const Image& img, const Transform& t,
                                 const DescriptorParams& params, const InterestPointSet& pts,
                                 double epsilon, const OffsetGrid& offsets,
                                 double percentile = 95.0) {
    if (!(epsilon > 0.0) && epsilon != 0.0)
        throw parameter_error("continuity_modulus: epsilon must be nonnegative");
    const auto profile = continuity_profile(img, t, params, pts, offsets, percentile);
    double best = 0.0;
    for (const auto& s : profile)
        if (s.samples > 0 && s.percentile_distance < epsilon) best = std::max(best, s.radius);
    return best;
}

} // namespace ipkit
