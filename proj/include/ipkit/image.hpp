#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "ipkit/errors.hpp"
#include "ipkit/rng.hpp"

namespace ipkit {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double norm(Point p) { return std::hypot(p.x, p.y); }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline double distance(Point a, Point b) { return norm(a - b); }

/// Grayscale raster, row-major doubles. Intensity images live in [0, 255];
/// the same container also carries derivative rasters, which may be negative.
class Image {
public:
    Image() = default;

    Image(int width, int height, double fill = 0.0)
        : width_(width), height_(height) {
        if (width < 1 || height < 1)
            throw parameter_error("Image: dimensions must be at least 1x1");
        data_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    Image(int width, int height, std::vector<double> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (width < 1 || height < 1)
            throw parameter_error("Image: dimensions must be at least 1x1");
        if (data_.size() != static_cast<std::size_t>(width) * height)
            throw parameter_error("Image: data size does not match dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    /// Clamp-to-edge read, defined for any integer coordinates.
    double at_clamped(int x, int y) const {
        x = std::clamp(x, 0, width_ - 1);
        y = std::clamp(y, 0, height_ - 1);
        return at(x, y);
    }

    /// True when (x, y) lies within the pixel-center domain
    /// [0, width-1] x [0, height-1].
    bool in_domain(double x, double y) const {
        return x >= 0.0 && x <= width_ - 1.0 && y >= 0.0 && y <= height_ - 1.0;
    }
    bool in_domain(Point p) const { return in_domain(p.x, p.y); }

    /// Bilinear sample; integer taps outside the raster read as 0.
    double bilinear_zero(double x, double y) const {
        const double fx = std::floor(x);
        const double fy = std::floor(y);
        const int x0 = static_cast<int>(fx);
        const int y0 = static_cast<int>(fy);
        const double ax = x - fx;
        const double ay = y - fy;
        auto tap = [&](int xi, int yi) -> double {
            if (xi < 0 || xi >= width_ || yi < 0 || yi >= height_) return 0.0;
            return at(xi, yi);
        };
        const double top = (1.0 - ax) * tap(x0, y0) + ax * tap(x0 + 1, y0);
        const double bot = (1.0 - ax) * tap(x0, y0 + 1) + ax * tap(x0 + 1, y0 + 1);
        return (1.0 - ay) * top + ay * bot;
    }

    bool operator==(const Image& other) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Transforms: invertible planar maps p -> matrix * p + translation.
// ---------------------------------------------------------------------------

enum class TransformKind { similarity, affine };

inline const char* to_string(TransformKind k) {
    return k == TransformKind::similarity ? "similarity" : "affine";
}

struct Transform {
    TransformKind kind = TransformKind::similarity;
    std::array<std::array<double, 2>, 2> matrix{{{1.0, 0.0}, {0.0, 1.0}}};
    std::array<double, 2> translation{0.0, 0.0};

    double det() const {
        return matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
    }
};

namespace detail {

inline bool matrix_is_similarity(const std::array<std::array<double, 2>, 2>& m, double tol) {
    // s*R with s > 0 and R orthonormal: columns orthogonal, equal norm, s != 0.
    const double c0 = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    const double c1 = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    const double dot = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    return std::abs(c0 - c1) <= tol && std::abs(dot) <= tol && c0 > tol;
}

} // namespace detail

/// Checked constructor; enforces invertibility and, for the similarity kind,
/// the s*R structure to within 1e-9.
inline Transform make_transform(TransformKind kind,
                                const std::array<std::array<double, 2>, 2>& matrix,
                                const std::array<double, 2>& translation) {
    Transform t{kind, matrix, translation};
    for (const auto& row : matrix)
        for (double v : row)
            if (!std::isfinite(v)) throw parameter_error("make_transform: non-finite matrix entry");
    for (double v : translation)
        if (!std::isfinite(v)) throw parameter_error("make_transform: non-finite translation");
    if (t.det() == 0.0) throw parameter_error("make_transform: singular matrix");
    if (kind == TransformKind::similarity && !detail::matrix_is_similarity(matrix, 1e-9))
        throw parameter_error("make_transform: matrix is not a scaled rotation");
    return t;
}

inline Transform identity_transform() {
    return Transform{};
}

inline Transform translation_transform(double tx, double ty) {
    return make_transform(TransformKind::similarity, {{{1.0, 0.0}, {0.0, 1.0}}}, {tx, ty});
}

/// scale * rotation(angle) followed by translation.
inline Transform similarity_transform(double scale, double angle_rad, double tx, double ty) {
    if (!(scale > 0.0)) throw parameter_error("similarity_transform: scale must be positive");
    const double c = std::cos(angle_rad), s = std::sin(angle_rad);
    return make_transform(TransformKind::similarity,
                          {{{scale * c, -scale * s}, {scale * s, scale * c}}}, {tx, ty});
}

inline Transform affine_transform(double m00, double m01, double m10, double m11,
                                  double tx, double ty) {
    return make_transform(TransformKind::affine, {{{m00, m01}, {m10, m11}}}, {tx, ty});
}

/// Rotation/scale about a fixed center point.
inline Transform similarity_about(Point center, double scale, double angle_rad) {
    const double c = std::cos(angle_rad), s = std::sin(angle_rad);
    const double tx = center.x - scale * (c * center.x - s * center.y);
    const double ty = center.y - scale * (s * center.x + c * center.y);
    return similarity_transform(scale, angle_rad, tx, ty);
}

/// Stable textual identifier used by report files.
inline std::string transform_id(const Transform& t) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s[%.9g %.9g; %.9g %.9g]+(%.9g, %.9g)", to_string(t.kind),
                  t.matrix[0][0], t.matrix[0][1], t.matrix[1][0], t.matrix[1][1],
                  t.translation[0], t.translation[1]);
    return buf;
}

inline Point apply_transform(const Transform& t, Point p) {
    return {t.matrix[0][0] * p.x + t.matrix[0][1] * p.y + t.translation[0],
            t.matrix[1][0] * p.x + t.matrix[1][1] * p.y + t.translation[1]};
}

inline Transform invert(const Transform& t) {
    const double d = t.det();
    if (std::abs(d) < 1e-12)
        throw singularity_error("invert: matrix is numerically singular");
    const std::array<std::array<double, 2>, 2> inv{
        {{t.matrix[1][1] / d, -t.matrix[0][1] / d},
         {-t.matrix[1][0] / d, t.matrix[0][0] / d}}};
    Transform out;
    out.kind = t.kind;
    out.matrix = inv;
    out.translation = {-(inv[0][0] * t.translation[0] + inv[0][1] * t.translation[1]),
                       -(inv[1][0] * t.translation[0] + inv[1][1] * t.translation[1])};
    return out;
}

/// compose(a, b) maps p to a(b(p)).
inline Transform compose(const Transform& a, const Transform& b) {
    Transform out;
    out.kind = (a.kind == TransformKind::affine || b.kind == TransformKind::affine)
                   ? TransformKind::affine
                   : TransformKind::similarity;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out.matrix[i][j] = a.matrix[i][0] * b.matrix[0][j] + a.matrix[i][1] * b.matrix[1][j];
    out.translation = {
        a.matrix[0][0] * b.translation[0] + a.matrix[0][1] * b.translation[1] + a.translation[0],
        a.matrix[1][0] * b.translation[0] + a.matrix[1][1] * b.translation[1] + a.translation[1]};
    return out;
}

// ---------------------------------------------------------------------------
// Filtering and differential operators.
// ---------------------------------------------------------------------------

namespace detail {

/// Sampled Gaussian, radius ceil(3*sigma), normalized to sum 1.
inline std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

} // namespace detail

/// Separable Gaussian convolution, clamp-to-edge borders. A unit-sum kernel,
/// so constants pass through unchanged.
inline Image gaussian_smooth(const Image& img, double sigma) {
    if (!(sigma > 0.0)) throw parameter_error("gaussian_smooth: sigma must be positive");
    const auto kernel = detail::gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int w = img.width(), h = img.height();

    Image tmp(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * img.at_clamped(x + i, y);
            tmp.at(x, y) = acc;
        }
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.at_clamped(x, y + i);
            out.at(x, y) = acc;
        }
    return out;
}

/// Central differences in the interior, one-sided at the borders.
/// Returns (dI/dx, dI/dy).
inline std::pair<Image, Image> gradient(const Image& img) {
    const int w = img.width(), h = img.height();
    if (w < 3 || h < 3) throw parameter_error("gradient: image must be at least 3x3");
    Image gx(w, h), gy(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (x == 0) gx.at(x, y) = img.at(1, y) - img.at(0, y);
            else if (x == w - 1) gx.at(x, y) = img.at(w - 1, y) - img.at(w - 2, y);
            else gx.at(x, y) = 0.5 * (img.at(x + 1, y) - img.at(x - 1, y));

            if (y == 0) gy.at(x, y) = img.at(x, 1) - img.at(x, 0);
            else if (y == h - 1) gy.at(x, y) = img.at(x, h - 1) - img.at(x, h - 2);
            else gy.at(x, y) = 0.5 * (img.at(x, y + 1) - img.at(x, y - 1));
        }
    return {std::move(gx), std::move(gy)};
}

/// 5-point stencil in the interior; border ring fixed to 0.
inline Image laplacian(const Image& img) {
    const int w = img.width(), h = img.height();
    if (w < 3 || h < 3) throw parameter_error("laplacian: image must be at least 3x3");
    Image out(w, h, 0.0);
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x)
            out.at(x, y) = img.at(x + 1, y) + img.at(x - 1, y) + img.at(x, y + 1) +
                           img.at(x, y - 1) - 4.0 * img.at(x, y);
    return out;
}

/// Inverse-mapping warp with bilinear interpolation. Output keeps the input
/// dimensions; source samples outside the domain contribute 0.
inline Image warp(const Image& img, const Transform& t) {
    const Transform inv = invert(t);
    const int w = img.width(), h = img.height();
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Point src = apply_transform(inv, {static_cast<double>(x), static_cast<double>(y)});
            out.at(x, y) = img.bilinear_zero(src.x, src.y);
        }
    return out;
}

/// Additive Gaussian pixel noise, clamped back into [0, 255].
inline Image add_gaussian_noise(const Image& img, double sigma, Rng& rng) {
    if (sigma < 0.0) throw parameter_error("add_gaussian_noise: sigma must be nonnegative");
    Image out = img;
    for (double& v : out.data()) v = std::clamp(v + rng.normal(0.0, sigma), 0.0, 255.0);
    return out;
}

} // namespace ipkit
