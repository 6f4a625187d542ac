#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "ipkit/correspond.hpp"
#include "ipkit/detect.hpp"
#include "ipkit/errors.hpp"
#include "ipkit/image.hpp"

namespace ipkit {

/// Pairwise-comparison counts for matching against n candidates where each
/// hit retires its candidate: n + (n-1) + ... + 1 in the worst case, and the
/// same sum over the n - n_star survivors once n_star redundant points are
/// gone. The instrumented matcher's own count is carried alongside; the two
/// describe different procedures and are not forced to agree.
struct CostReport {
    std::uint64_t n = 0;
    std::uint64_t n_star = 0; // points removed as redundant
    std::uint64_t cost_full = 0;
    std::uint64_t cost_pruned = 0;
    std::uint64_t savings = 0;
    std::uint64_t measured_evaluations = 0;
};

inline CostReport cost_report(std::uint64_t n, std::uint64_t n_star,
                              std::uint64_t measured = 0) {
    if (n_star > n) throw parameter_error("cost_report: removed count exceeds set size");
    CostReport r;
    r.n = n;
    r.n_star = n_star;
    r.cost_full = n * (n + 1) / 2;
    const std::uint64_t kept = n - n_star;
    r.cost_pruned = kept * (kept + 1) / 2;
    r.savings = n_star * (1 + 2 * n - n_star) / 2;
    r.measured_evaluations = measured;
    return r;
}

namespace detail {

/// Gaussian elimination with partial pivoting on an N x N system.
template <std::size_t N>
std::array<double, N> solve_linear(std::array<std::array<double, N>, N> a,
                                   std::array<double, N> b) {
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-12)
            throw degeneracy_error("solve_linear: singular system");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < N; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::array<double, N> x{};
    for (std::size_t ri = N; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < N; ++c) s -= a[ri][c] * x[c];
        x[ri] = s / a[ri][ri];
    }
    return x;
}

} // namespace detail

/// Least-squares fit of a transform to location pairs. Similarity fits
/// (scale, rotation, shift) as four parameters; affine fits six. Too few
/// pairs or a rank-deficient configuration (coincident points for
/// similarity, collinear for affine) raises degeneracy_error.
inline Transform fit_transform(const std::vector<std::pair<Point, Point>>& pairs,
                               TransformKind kind) {
    if (kind == TransformKind::similarity) {
        if (pairs.size() < 2) throw degeneracy_error("fit_transform: similarity needs two pairs");
        // Model dst = [a -b; b a] src + (tx, ty); unknowns (a, b, tx, ty).
        std::array<std::array<double, 4>, 4> m{};
        std::array<double, 4> rhs{};
        for (const auto& [p, q] : pairs) {
            const std::array<double, 4> row_x{p.x, -p.y, 1.0, 0.0};
            const std::array<double, 4> row_y{p.y, p.x, 0.0, 1.0};
            for (std::size_t i = 0; i < 4; ++i) {
                for (std::size_t j = 0; j < 4; ++j)
                    m[i][j] += row_x[i] * row_x[j] + row_y[i] * row_y[j];
                rhs[i] += row_x[i] * q.x + row_y[i] * q.y;
            }
        }
        const auto s = detail::solve_linear(m, rhs);
        if (s[0] * s[0] + s[1] * s[1] < 1e-24)
            throw degeneracy_error("fit_transform: similarity collapsed to zero scale");
        Transform t;
        t.kind = TransformKind::similarity;
        t.matrix = {{{s[0], -s[1]}, {s[1], s[0]}}};
        t.translation = {s[2], s[3]};
        return t;
    }

    if (pairs.size() < 3) throw degeneracy_error("fit_transform: affine needs three pairs");
    // The same 3x3 normal matrix serves both coordinate rows.
    std::array<std::array<double, 3>, 3> m{};
    std::array<double, 3> rx{};
    std::array<double, 3> ry{};
    for (const auto& [p, q] : pairs) {
        const std::array<double, 3> row{p.x, p.y, 1.0};
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) m[i][j] += row[i] * row[j];
            rx[i] += row[i] * q.x;
            ry[i] += row[i] * q.y;
        }
    }
    const auto a = detail::solve_linear(m, rx);
    const auto b = detail::solve_linear(m, ry);
    Transform t;
    t.kind = TransformKind::affine;
    t.matrix = {{{a[0], a[1]}, {b[0], b[1]}}};
    t.translation = {a[2], b[2]};
    if (std::abs(t.det()) < 1e-12)
        throw degeneracy_error("fit_transform: fitted affine map is singular");
    return t;
}

struct RegistrationReport {
    TransformKind model = TransformKind::similarity;
    Transform estimated;
    double rms_error = 0.0; // residuals over the matches used for the fit
    double max_error = 0.0;
    std::size_t n_correspondences = 0;
};

/// Fits a transform to matched point pairs and reports the fit residuals.
inline RegistrationReport estimate_transform(const CorrespondenceSet& matches,
                                             const InterestPointSet& pts1,
                                             const InterestPointSet& pts2, TransformKind model) {
    std::vector<std::pair<Point, Point>> pairs;
    pairs.reserve(matches.pairs.size());
    for (const auto& [i, j] : matches.pairs) {
        if (i >= pts1.size() || j >= pts2.size())
            throw consistency_error("estimate_transform: match index out of range");
        pairs.emplace_back(pts1.points[i].location, pts2.points[j].location);
    }
    RegistrationReport rep;
    rep.model = model;
    rep.estimated = fit_transform(pairs, model);
    rep.n_correspondences = pairs.size();
    double sum2 = 0.0;
    for (const auto& [p, q] : pairs) {
        const double r = distance(apply_transform(rep.estimated, p), q);
        sum2 += r * r;
        rep.max_error = std::max(rep.max_error, r);
    }
    rep.rms_error = std::sqrt(sum2 / static_cast<double>(pairs.size()));
    return rep;
}

struct ApproximationError {
    double rms = 0.0;
    double max = 0.0;
};

/// Disagreement between two transforms sampled on a regular grid spanning a
/// width x height pixel domain; the grid always includes both domain edges.
inline ApproximationError approximation_error(const Transform& estimated,
                                              const Transform& reference, int width, int height,
                                              double grid_step = 1.0) {
    if (width < 1 || height < 1) throw parameter_error("approximation_error: empty domain");
    if (grid_step < 1.0)
        throw parameter_error("approximation_error: grid step must be at least 1 px");
    const double x_max = width - 1.0;
    const double y_max = height - 1.0;
    std::vector<double> xs, ys;
    for (double x = 0.0; x < x_max; x += grid_step) xs.push_back(x);
    xs.push_back(x_max);
    for (double y = 0.0; y < y_max; y += grid_step) ys.push_back(y);
    ys.push_back(y_max);

    ApproximationError out;
    double sum2 = 0.0;
    for (double y : ys)
        for (double x : xs) {
            const Point p{x, y};
            const double d =
                distance(apply_transform(estimated, p), apply_transform(reference, p));
            sum2 += d * d;
            out.max = std::max(out.max, d);
        }
    out.rms = std::sqrt(sum2 / static_cast<double>(xs.size() * ys.size()));
    return out;
}

/// Fraction of source points re-found within tolerance after the transform:
/// a point counts when some target point lies within tolerance of its mapped
/// location. Points leaving the target domain are excluded; an empty
/// in-domain set gives 0.
inline double repeatability(const InterestPointSet& src, const InterestPointSet& dst,
                            const Transform& transform, double tolerance) {
    if (tolerance < 0.0) throw parameter_error("repeatability: tolerance must be nonnegative");
    if (src.empty() || dst.empty()) return 0.0;
    const DetectionErrorMap errs = detection_error(src, dst, transform);
    std::size_t considered = 0;
    std::size_t repeated = 0;
    for (const auto& e : errs.errors) {
        if (!e.has_value()) continue;
        ++considered;
        if (*e <= tolerance) ++repeated;
    }
    if (considered == 0) return 0.0;
    return static_cast<double>(repeated) / static_cast<double>(considered);
}

} // namespace ipkit
