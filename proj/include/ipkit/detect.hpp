#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ipkit/errors.hpp"
#include "ipkit/image.hpp"

namespace ipkit {

struct InterestPoint {
    Point location;
    double response = 0.0;
    double scale = 1.0;
};

struct DetectorParams {
    double smoothing_sigma = 1.0;
    double response_threshold = 0.0;
    double nms_radius = 5.0;
    int max_points = 0; // <= 0 means unlimited

    void validate() const {
        if (!(smoothing_sigma > 0.0))
            throw parameter_error("DetectorParams: smoothing_sigma must be positive");
        if (response_threshold < 0.0)
            throw parameter_error("DetectorParams: response_threshold must be nonnegative");
        if (nms_radius < 1.0) throw parameter_error("DetectorParams: nms_radius must be >= 1");
    }
};

/// Finite, deduplicated detector output, ordered by descending response.
/// Carries the source image dimensions so downstream error measurement can
/// test whether transformed points still land in the domain.
struct InterestPointSet {
    std::vector<InterestPoint> points;
    std::string detector_id;
    DetectorParams params;
    int domain_width = 0;
    int domain_height = 0;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    bool in_domain(Point p) const {
        return p.x >= 0.0 && p.x <= domain_width - 1.0 && p.y >= 0.0 &&
               p.y <= domain_height - 1.0;
    }
};

/// Test/tooling helper for sets that did not come from a detector.
inline InterestPointSet make_point_set(std::vector<InterestPoint> points, int domain_width,
                                       int domain_height, std::string detector_id = "manual") {
    InterestPointSet s;
    s.points = std::move(points);
    s.detector_id = std::move(detector_id);
    s.domain_width = domain_width;
    s.domain_height = domain_height;
    return s;
}

namespace detail {

struct Candidate {
    int x, y;
    double response;
};

/// Local maxima of the response within a Euclidean disc of nms_radius.
/// Plateau ties go to the earlier pixel in row-major order.
inline std::vector<Candidate> grid_maxima(const Image& response, double threshold,
                                          double nms_radius) {
    const int w = response.width(), h = response.height();
    const int r = static_cast<int>(std::floor(nms_radius));
    const double r2 = nms_radius * nms_radius;
    std::vector<Candidate> out;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = response.at(x, y);
            if (!(v > threshold)) continue;
            bool is_max = true;
            for (int dy = -r; dy <= r && is_max; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (dx * dx + dy * dy > r2) continue;
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const double nv = response.at(nx, ny);
                    if (nv > v || (nv == v && (ny < y || (ny == y && nx < x)))) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max) out.push_back({x, y, v});
        }
    return out;
}

/// 3x3 quadratic peak fit. Returns the integer location unchanged when the
/// fitted surface is not concave; the offset is clamped to half a pixel.
inline Point refine_quadratic(const Image& response, int x, int y) {
    const Point integer_loc{static_cast<double>(x), static_cast<double>(y)};
    if (x < 1 || x >= response.width() - 1 || y < 1 || y >= response.height() - 1)
        return integer_loc;
    const double c = response.at(x, y);
    const double dx = 0.5 * (response.at(x + 1, y) - response.at(x - 1, y));
    const double dy = 0.5 * (response.at(x, y + 1) - response.at(x, y - 1));
    const double dxx = response.at(x + 1, y) + response.at(x - 1, y) - 2.0 * c;
    const double dyy = response.at(x, y + 1) + response.at(x, y - 1) - 2.0 * c;
    const double dxy = 0.25 * (response.at(x + 1, y + 1) - response.at(x - 1, y + 1) -
                               response.at(x + 1, y - 1) + response.at(x - 1, y - 1));
    // Concavity: negative-definite Hessian.
    const double det = dxx * dyy - dxy * dxy;
    if (!(dxx < 0.0) || !(det > 0.0)) return integer_loc;
    double ox = -(dyy * dx - dxy * dy) / det;
    double oy = -(dxx * dy - dxy * dx) / det;
    ox = std::clamp(ox, -0.5, 0.5);
    oy = std::clamp(oy, -0.5, 0.5);
    return {x + ox, y + oy};
}

/// Shared back half of both detectors: NMS, refinement, ordering, the
/// refined-coordinate separation guarantee, and truncation.
inline InterestPointSet select_points(const Image& response, const DetectorParams& p,
                                      const std::string& detector_id) {
    auto candidates = grid_maxima(response, p.response_threshold, p.nms_radius);
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.response != b.response) return a.response > b.response;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });

    InterestPointSet out;
    out.detector_id = detector_id;
    out.params = p;
    out.domain_width = response.width();
    out.domain_height = response.height();

    const double min_sep = 0.5 * p.nms_radius;
    for (const auto& c : candidates) {
        if (p.max_points > 0 && out.points.size() == static_cast<std::size_t>(p.max_points)) break;
        Point loc = refine_quadratic(response, c.x, c.y);
        bool too_close = false;
        for (const auto& kept : out.points)
            if (distance(kept.location, loc) < min_sep) {
                too_close = true;
                break;
            }
        if (too_close) continue;
        out.points.push_back({loc, c.response, p.smoothing_sigma});
    }
    return out;
}

inline void check_detect_input(const Image& img, const DetectorParams& p) {
    p.validate();
    if (img.width() < 7 || img.height() < 7)
        throw parameter_error("detector: image must be at least 7x7");
}

} // namespace detail

/// Harris corners: response det(M) - 0.04*trace(M)^2 of the structure tensor
/// built from the smoothed image, tensor entries smoothed at the same sigma.
inline InterestPointSet detect_harris(const Image& img, const DetectorParams& p) {
    detail::check_detect_input(img, p);
    const Image pre = gaussian_smooth(img, p.smoothing_sigma);
    auto [gx, gy] = gradient(pre);

    const int w = img.width(), h = img.height();
    Image xx(w, h), yy(w, h), xy(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double ix = gx.at(x, y), iy = gy.at(x, y);
            xx.at(x, y) = ix * ix;
            yy.at(x, y) = iy * iy;
            xy.at(x, y) = ix * iy;
        }
    xx = gaussian_smooth(xx, p.smoothing_sigma);
    yy = gaussian_smooth(yy, p.smoothing_sigma);
    xy = gaussian_smooth(xy, p.smoothing_sigma);

    Image response(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double a = xx.at(x, y), b = yy.at(x, y), c = xy.at(x, y);
            const double det = a * b - c * c;
            const double tr = a + b;
            response.at(x, y) = det - 0.04 * tr * tr;
        }
    return detail::select_points(response, p, "harris");
}

/// Extrema of |Laplacian of Gaussian| at the configured sigma; maxima and
/// minima of the LoG both appear as maxima of the magnitude.
inline InterestPointSet detect_log_extrema(const Image& img, const DetectorParams& p) {
    detail::check_detect_input(img, p);
    const Image pre = gaussian_smooth(img, p.smoothing_sigma);
    Image response = laplacian(pre);
    for (double& v : response.data()) v = std::abs(v);
    return detail::select_points(response, p, "log");
}

/// Dispatch on detector id ("harris" or "log").
inline InterestPointSet detect(const std::string& detector_id, const Image& img,
                               const DetectorParams& p) {
    if (detector_id == "harris") return detect_harris(img, p);
    if (detector_id == "log") return detect_log_extrema(img, p);
    throw parameter_error("unknown detector: " + detector_id);
}

} // namespace ipkit
