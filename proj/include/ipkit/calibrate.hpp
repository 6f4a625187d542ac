#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ipkit/correspond.hpp"
#include "ipkit/describe.hpp"
#include "ipkit/detect.hpp"
#include "ipkit/errors.hpp"
#include "ipkit/evaluate.hpp"
#include "ipkit/image.hpp"
#include "ipkit/rng.hpp"

namespace ipkit {

enum class TransformFamily { translation, similarity, affine };

inline std::string family_name(TransformFamily f) {
    switch (f) {
    case TransformFamily::translation: return "translation";
    case TransformFamily::similarity: return "similarity";
    default: return "affine";
    }
}

inline TransformFamily family_from_name(const std::string& name) {
    if (name == "translation") return TransformFamily::translation;
    if (name == "similarity") return TransformFamily::similarity;
    if (name == "affine") return TransformFamily::affine;
    throw parameter_error("unknown transform family: " + name);
}

struct SamplerRanges {
    double shift = 4.0;     // |tx|, |ty| bound, px
    double angle = 0.35;    // |rotation| bound, radians
    double scale_min = 0.9; // scale factor interval
    double scale_max = 1.1;
    double shear = 0.1; // |shear| bound, affine only

    void validate() const {
        if (shift < 0.0 || angle < 0.0 || shear < 0.0)
            throw parameter_error("sampler ranges must be nonnegative");
        if (!(scale_min > 0.0) || scale_min > scale_max)
            throw parameter_error("sampler scale interval must satisfy 0 < min <= max");
        if (shear > 0.99) throw parameter_error("sampler shear bound must stay below 1");
    }
};

/// Draws invertible transforms from a parametric family, rotating and
/// scaling about a fixed center. The draw order per transform is fixed
/// (scale, angle, tx, ty, then shears), so a seed pins the whole sequence.
class TransformSampler {
  public:
    TransformSampler(TransformFamily family, SamplerRanges ranges, std::uint64_t seed,
                     Point center)
        : family_(family), ranges_(ranges), center_(center), rng_(seed) {
        ranges_.validate();
    }

    TransformFamily family() const { return family_; }
    const SamplerRanges& ranges() const { return ranges_; }
    Point center() const { return center_; }

    Transform next() {
        if (family_ == TransformFamily::translation) {
            const double tx = rng_.uniform(-ranges_.shift, ranges_.shift);
            const double ty = rng_.uniform(-ranges_.shift, ranges_.shift);
            return translation_transform(tx, ty);
        }
        const double scale = rng_.uniform(ranges_.scale_min, ranges_.scale_max);
        const double angle = rng_.uniform(-ranges_.angle, ranges_.angle);
        const double tx = rng_.uniform(-ranges_.shift, ranges_.shift);
        const double ty = rng_.uniform(-ranges_.shift, ranges_.shift);
        if (family_ == TransformFamily::similarity) {
            Transform t = similarity_about(center_, scale, angle);
            t.translation[0] += tx;
            t.translation[1] += ty;
            return t;
        }
        const double shx = rng_.uniform(-ranges_.shear, ranges_.shear);
        const double shy = rng_.uniform(-ranges_.shear, ranges_.shear);
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        // scale * rotation * shear; det = scale^2 (1 - shx shy) != 0 within
        // the validated ranges.
        Transform t;
        t.kind = TransformKind::affine;
        t.matrix = {{{scale * (c - s * shy), scale * (c * shx - s)},
                     {scale * (s + c * shy), scale * (s * shx + c)}}};
        t.translation = {center_.x + tx - (t.matrix[0][0] * center_.x + t.matrix[0][1] * center_.y),
                         center_.y + ty -
                             (t.matrix[1][0] * center_.x + t.matrix[1][1] * center_.y)};
        if (std::abs(t.det()) < 1e-9)
            throw calibration_error("sampled transform is singular"); // unreachable with valid ranges
        return t;
    }

    std::vector<Transform> sample(std::size_t n) {
        std::vector<Transform> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(next());
        return out;
    }

  private:
    TransformFamily family_;
    SamplerRanges ranges_;
    Point center_;
    Rng rng_;
};

struct CalibrationResult {
    double epsilon_d = 0.0;
    double delta_d = 0.0;
    std::string descriptor_id;
    std::string transform_family;
    std::size_t sample_count = 0;
    double percentile = 0.0;
    bool achieved = true; // false when no swept candidate met the target
};

/// Largest displacement that keeps descriptor distances under epsilon_d
/// across a sampled transform family: the minimum of the per-transform
/// continuity moduli, i.e. the worst case over the sample.
inline CalibrationResult estimate_delta_d(const Image& img, TransformSampler& sampler,
                                          std::size_t n_transforms,
                                          const DescriptorParams& desc_params,
                                          const InterestPointSet& pts, double epsilon_d,
                                          const OffsetGrid& offsets = OffsetGrid::make(),
                                          double percentile = 95.0) {
    if (n_transforms == 0) throw parameter_error("estimate_delta_d: need at least one transform");
    if (pts.empty()) throw parameter_error("estimate_delta_d: empty point set");
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_transforms; ++i) {
        const Transform t = sampler.next();
        worst = std::min(worst, continuity_modulus(img, t, desc_params, pts, epsilon_d, offsets,
                                                   percentile));
    }
    CalibrationResult r;
    r.epsilon_d = epsilon_d;
    r.delta_d = worst;
    r.descriptor_id = desc_params.id();
    r.transform_family = family_name(sampler.family());
    r.sample_count = n_transforms;
    r.percentile = percentile;
    r.achieved = worst > 0.0;
    return r;
}

namespace detail {

inline TransformKind fit_model(TransformFamily family) {
    return family == TransformFamily::affine ? TransformKind::affine : TransformKind::similarity;
}

inline std::size_t min_pairs(TransformKind kind) {
    return kind == TransformKind::affine ? 3 : 2;
}

/// Interest points far enough from the border to be described, with their
/// original indices.
inline std::pair<InterestPointSet, std::vector<std::size_t>> describable_subset(
    const InterestPointSet& pts, const DescriptorField& field) {
    InterestPointSet kept = pts;
    kept.points.clear();
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (field.inside_margin(pts.points[i].location)) {
            kept.points.push_back(pts.points[i]);
            index.push_back(i);
        }
    return {kept, index};
}

inline std::vector<DescriptorVector> describe_all(const DescriptorField& field,
                                                  const InterestPointSet& pts) {
    std::vector<DescriptorVector> out;
    out.reserve(pts.size());
    for (const auto& p : pts.points) out.push_back(field.at(p.location));
    return out;
}

} // namespace detail

/// Picks the matching threshold empirically: sweeps the deciles of the
/// descriptor distances observed on geometrically true pairs, and keeps the
/// largest candidate for which threshold matching still registers the known
/// transform to within admissible_error pixels over the whole domain. If no
/// candidate qualifies the smallest is returned with achieved = false.
inline CalibrationResult estimate_epsilon_d(const Image& img, TransformSampler& sampler,
                                            const std::string& detector_id,
                                            const DetectorParams& det_params,
                                            const DescriptorParams& desc_params,
                                            double admissible_error,
                                            std::size_t n_transforms = 1) {
    if (!(admissible_error > 0.0))
        throw parameter_error("estimate_epsilon_d: admissible_error must be positive");
    if (n_transforms == 0)
        throw parameter_error("estimate_epsilon_d: need at least one transform");

    const InterestPointSet src_all = detect(detector_id, img, det_params);
    if (src_all.empty()) throw calibration_error("estimate_epsilon_d: no points detected");
    const DescriptorField src_field(img, desc_params);
    auto [src, src_index] = detail::describable_subset(src_all, src_field);
    if (src.empty()) throw calibration_error("estimate_epsilon_d: no describable points");
    const auto src_desc = detail::describe_all(src_field, src);

    struct PairScene {
        Transform transform;
        InterestPointSet dst;
        std::vector<DescriptorVector> dst_desc;
    };
    std::vector<PairScene> scenes;
    std::vector<double> true_distances;
    for (std::size_t i = 0; i < n_transforms; ++i) {
        const Transform t = sampler.next();
        const Image warped = warp(img, t);
        const InterestPointSet dst_all = detect(detector_id, warped, det_params);
        if (dst_all.empty()) continue;
        const DescriptorField dst_field(warped, desc_params);
        auto [dst, dst_index] = detail::describable_subset(dst_all, dst_field);
        if (dst.empty()) continue;
        auto dst_desc = detail::describe_all(dst_field, dst);

        // True pairs: source points whose mapped location has a target point
        // within the admissible registration error.
        const DetectionErrorMap errs = detection_error(src, dst, t);
        for (std::size_t k = 0; k < src.size(); ++k) {
            if (!errs.errors[k].has_value() || *errs.errors[k] > admissible_error) continue;
            const Point mapped = apply_transform(t, src.points[k].location);
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < dst.size(); ++j) {
                const double d = distance(mapped, dst.points[j].location);
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            true_distances.push_back(distance(src_desc[k], dst_desc[best]));
        }
        scenes.push_back({t, std::move(dst), std::move(dst_desc)});
    }
    if (scenes.empty()) throw calibration_error("estimate_epsilon_d: no points detected");
    if (true_distances.empty())
        throw calibration_error("estimate_epsilon_d: no geometrically true pairs observed");

    std::sort(true_distances.begin(), true_distances.end());
    std::vector<std::pair<double, double>> candidates; // (epsilon, percentile)
    for (int decile = 1; decile <= 10; ++decile) {
        const double pct = 10.0 * decile;
        const double value = detail::percentile_nearest_rank(true_distances, pct);
        if (candidates.empty() || value > candidates.back().first)
            candidates.emplace_back(value, pct);
    }

    const TransformKind model = detail::fit_model(sampler.family());
    const std::size_t need = detail::min_pairs(model);
    std::optional<std::size_t> chosen;
    bool any_fit = false;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const double eps = candidates[c].first;
        bool ok = true;
        for (const auto& scene : scenes) {
            const auto matched =
                match_by_descriptor(src_desc, scene.dst_desc, eps, MatchMode::threshold);
            if (matched.matches.pairs.size() < need) {
                ok = false;
                break;
            }
            std::vector<std::pair<Point, Point>> loc_pairs;
            loc_pairs.reserve(matched.matches.pairs.size());
            for (const auto& [i, j] : matched.matches.pairs)
                loc_pairs.emplace_back(src.points[i].location, scene.dst.points[j].location);
            const Transform fitted = fit_transform(loc_pairs, model);
            any_fit = true;
            if (approximation_error(fitted, scene.transform, img.width(), img.height()).max >
                admissible_error) {
                ok = false;
                break;
            }
        }
        if (ok) chosen = c;
    }
    if (!chosen.has_value() && !any_fit)
        throw calibration_error(
            "estimate_epsilon_d: too few correspondences at every candidate threshold");

    CalibrationResult r;
    const std::size_t pick = chosen.value_or(0);
    r.epsilon_d = candidates[pick].first;
    r.percentile = candidates[pick].second;
    r.achieved = chosen.has_value();
    r.descriptor_id = desc_params.id();
    r.transform_family = family_name(sampler.family());
    r.sample_count = scenes.size();
    return r;
}

struct ErrorEstimate {
    std::vector<double> scores; // aligned with the point set; larger = worse
    double threshold = 0.0;
    std::string estimator_id;
};

/// Points flagged as redundant by an estimate: score strictly above the
/// threshold. All estimators share this orientation.
inline std::vector<bool> predicted_redundant(const ErrorEstimate& est) {
    std::vector<bool> out(est.scores.size());
    for (std::size_t i = 0; i < est.scores.size(); ++i) out[i] = est.scores[i] > est.threshold;
    return out;
}

enum class Aggregation { mean, median };

namespace detail {

constexpr double kNeverInDomain = 1e18;

/// Mean (default) or median of the in-domain error observations for one
/// point; the sentinel when there are none.
inline double aggregate_scores(const std::vector<double>& values, Aggregation mode) {
    if (values.empty()) return kNeverInDomain;
    if (mode == Aggregation::mean) {
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum / static_cast<double>(values.size());
    }
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    if (sorted.size() % 2 == 1) return sorted[mid];
    return 0.5 * (sorted[mid - 1] + sorted[mid]);
}

} // namespace detail

/// Direct transform-sampling estimate: per-point mean detection error across
/// re-detections under sampled transforms. Points that never stay in-domain
/// get a large sentinel score.
inline ErrorEstimate sampling_estimator(const Image& img, const std::string& detector_id,
                                        const DetectorParams& det_params,
                                        TransformSampler& sampler, std::size_t n_transforms,
                                        double delta_hat,
                                        Aggregation aggregation = Aggregation::mean) {
    if (n_transforms == 0)
        throw parameter_error("sampling_estimator: need at least one transform");
    const InterestPointSet pts = detect(detector_id, img, det_params);
    std::vector<std::vector<double>> observed(pts.size());
    for (std::size_t i = 0; i < n_transforms; ++i) {
        const Transform t = sampler.next();
        const Image warped = warp(img, t);
        const InterestPointSet dst = detect(detector_id, warped, det_params);
        if (dst.empty()) continue; // nothing re-detected: no observation this round
        const DetectionErrorMap errs = detection_error(pts, dst, t);
        for (std::size_t k = 0; k < pts.size(); ++k)
            if (errs.errors[k].has_value()) observed[k].push_back(*errs.errors[k]);
    }
    ErrorEstimate est;
    est.estimator_id = "sampling";
    est.threshold = delta_hat;
    est.scores.reserve(pts.size());
    for (const auto& obs : observed)
        est.scores.push_back(detail::aggregate_scores(obs, aggregation));
    return est;
}

/// Laplacian magnitude heuristic: strong second-derivative response is read
/// as stability, so the score is -|Laplacian| and the threshold -delta_hat;
/// a point is then redundant exactly when |Laplacian| < delta_hat.
inline ErrorEstimate laplacian_estimator(const Image& img, const InterestPointSet& pts,
                                         double delta_hat) {
    const Image lap = laplacian(img);
    ErrorEstimate est;
    est.estimator_id = "laplacian";
    est.threshold = -delta_hat;
    est.scores.reserve(pts.size());
    for (const auto& p : pts.points) {
        const double x = p.location.x;
        const double y = p.location.y;
        // the Laplacian plane's outer ring is zeroed padding, not data
        if (x < 1.0 || y < 1.0 || x > img.width() - 2.0 || y > img.height() - 2.0)
            throw margin_error("laplacian_estimator: point in zeroed border ring");
        est.scores.push_back(-std::abs(lap.bilinear_zero(x, y)));
    }
    return est;
}

struct FeatureConfig {
    int variance_radius = 3;
    double njet_sigma = 2.0;
};

/// Per-point stability features: |Laplacian|, detector response, local
/// intensity variance, and the magnitude of the order-2 jet coefficients.
/// Sample locations are clamped into each plane's valid interior so border
/// points still get features.
inline std::vector<std::vector<double>> stability_features(const Image& img,
                                                           const InterestPointSet& pts,
                                                           const FeatureConfig& cfg = {}) {
    if (cfg.variance_radius < 1)
        throw parameter_error("stability_features: variance radius must be positive");
    const Image lap = laplacian(img);
    DescriptorParams jet;
    jet.kind = DescriptorKind::njet;
    jet.order = 2;
    jet.sigma = cfg.njet_sigma;
    const DescriptorField field(img, jet);
    const double m = static_cast<double>(jet.margin());
    const double jx_hi = img.width() - 1.0 - m;
    const double jy_hi = img.height() - 1.0 - m;
    if (jx_hi < m || jy_hi < m)
        throw margin_error("stability_features: image too small for the jet features");

    std::vector<std::vector<double>> out;
    out.reserve(pts.size());
    for (const auto& p : pts.points) {
        const double lx = std::clamp(p.location.x, 1.0, img.width() - 2.0);
        const double ly = std::clamp(p.location.y, 1.0, img.height() - 2.0);
        const double abs_lap = std::abs(lap.bilinear_zero(lx, ly));

        const int cx = static_cast<int>(std::lround(p.location.x));
        const int cy = static_cast<int>(std::lround(p.location.y));
        double sum = 0.0, sum2 = 0.0;
        int count = 0;
        for (int dy = -cfg.variance_radius; dy <= cfg.variance_radius; ++dy)
            for (int dx = -cfg.variance_radius; dx <= cfg.variance_radius; ++dx) {
                const double v = img.at_clamped(cx + dx, cy + dy);
                sum += v;
                sum2 += v * v;
                ++count;
            }
        const double mean = sum / count;
        const double variance = std::max(0.0, sum2 / count - mean * mean);

        const Point jp{std::clamp(p.location.x, m, jx_hi), std::clamp(p.location.y, m, jy_hi)};
        const DescriptorVector d = field.at(jp);
        // layout: I, Ix, Iy, Ixx, Ixy, Iyy
        const double jet2 = std::sqrt(d.values[3] * d.values[3] + d.values[4] * d.values[4] +
                                      d.values[5] * d.values[5]);

        out.push_back({abs_lap, p.response, variance, jet2});
    }
    return out;
}

struct LearnedConfig {
    double learning_rate = 0.5;
    std::size_t iterations = 200;
    std::uint64_t seed = 0; // reserved; training is deterministic regardless
};

struct LearnedModel {
    std::vector<double> weights; // per standardized feature
    double bias = 0.0;
    std::vector<double> feature_means;
    std::vector<double> feature_stds;
    std::vector<std::string> feature_names;
    std::uint64_t seed = 0;
    std::vector<double> loss_trace; // loss before training, then after each step

    std::size_t feature_count() const { return weights.size(); }
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// log(1 + e^z) without overflow.
inline double softplus(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

inline std::vector<std::vector<double>> standardize(const std::vector<std::vector<double>>& x,
                                                    const std::vector<double>& means,
                                                    const std::vector<double>& stds) {
    std::vector<std::vector<double>> out = x;
    for (auto& row : out)
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - means[j]) / stds[j];
    return out;
}

} // namespace detail

/// Logistic regression on standardized features; the positive class is
/// "stays correct under the transform family". Plain gradient descent from
/// zero weights, with step backtracking so the recorded loss never rises.
inline LearnedModel train_learned_estimator(const std::vector<std::vector<double>>& features,
                                            const std::vector<bool>& labels,
                                            const LearnedConfig& config = {}) {
    if (features.size() != labels.size())
        throw consistency_error("train_learned_estimator: feature/label count mismatch");
    if (features.empty()) throw degenerate_data_error("train_learned_estimator: empty training set");
    const std::size_t dim = features.front().size();
    if (dim == 0) throw degenerate_data_error("train_learned_estimator: empty feature vectors");
    for (const auto& row : features)
        if (row.size() != dim)
            throw incompatibility_error("train_learned_estimator: ragged feature vectors");
    std::size_t positives = 0;
    for (bool l : labels) positives += l ? 1 : 0;
    if (positives < 2 || labels.size() - positives < 2)
        throw degenerate_data_error("train_learned_estimator: need two examples per class");
    if (!(config.learning_rate > 0.0) || config.iterations == 0)
        throw parameter_error("train_learned_estimator: bad learning configuration");

    LearnedModel model;
    model.seed = config.seed;
    for (std::size_t j = 0; j < dim; ++j) model.feature_names.push_back("f" + std::to_string(j));
    model.feature_means.assign(dim, 0.0);
    model.feature_stds.assign(dim, 0.0);
    for (const auto& row : features)
        for (std::size_t j = 0; j < dim; ++j) model.feature_means[j] += row[j];
    for (double& mu : model.feature_means) mu /= static_cast<double>(features.size());
    for (const auto& row : features)
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = row[j] - model.feature_means[j];
            model.feature_stds[j] += d * d;
        }
    for (double& sd : model.feature_stds) {
        sd = std::sqrt(sd / static_cast<double>(features.size()));
        if (sd < 1e-12) sd = 1.0; // constant feature carries no signal
    }
    const auto x = detail::standardize(features, model.feature_means, model.feature_stds);
    const std::size_t m = x.size();

    model.weights.assign(dim, 0.0);
    auto loss_at = [&](const std::vector<double>& w, double b) {
        double loss = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double z = b;
            for (std::size_t j = 0; j < dim; ++j) z += w[j] * x[i][j];
            loss += detail::softplus(z) - (labels[i] ? z : 0.0);
        }
        return loss / static_cast<double>(m);
    };

    double loss = loss_at(model.weights, model.bias);
    model.loss_trace.push_back(loss);
    double lr = config.learning_rate;
    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        std::vector<double> grad(dim, 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double z = model.bias;
            for (std::size_t j = 0; j < dim; ++j) z += model.weights[j] * x[i][j];
            const double r = detail::sigmoid(z) - (labels[i] ? 1.0 : 0.0);
            for (std::size_t j = 0; j < dim; ++j) grad[j] += r * x[i][j];
            grad_b += r;
        }
        for (double& g : grad) g /= static_cast<double>(m);
        grad_b /= static_cast<double>(m);

        bool stepped = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            std::vector<double> w = model.weights;
            for (std::size_t j = 0; j < dim; ++j) w[j] -= lr * grad[j];
            const double b = model.bias - lr * grad_b;
            const double candidate = loss_at(w, b);
            if (candidate <= loss) {
                model.weights = std::move(w);
                model.bias = b;
                loss = candidate;
                stepped = true;
                break;
            }
            lr *= 0.5;
        }
        model.loss_trace.push_back(loss);
        if (!stepped) break; // no descent direction left at double precision
    }
    return model;
}

/// Probability of the positive (stays-correct) class for one feature vector.
inline double learned_probability(const LearnedModel& model, const std::vector<double>& features) {
    if (features.size() != model.feature_count())
        throw incompatibility_error("predict_learned: feature length does not match the model");
    double z = model.bias;
    for (std::size_t j = 0; j < features.size(); ++j)
        z += model.weights[j] * (features[j] - model.feature_means[j]) / model.feature_stds[j];
    return detail::sigmoid(z);
}

/// Scores are negated probabilities with threshold -0.5, so redundant means
/// probability of staying correct strictly below one half.
inline ErrorEstimate predict_learned(const LearnedModel& model,
                                     const std::vector<std::vector<double>>& features) {
    ErrorEstimate est;
    est.estimator_id = "learned";
    est.threshold = -0.5;
    est.scores.reserve(features.size());
    for (const auto& row : features) est.scores.push_back(-learned_probability(model, row));
    return est;
}

/// Area under the ROC curve for "score > threshold flags redundant": the
/// probability a redundant point outranks a correct one, ties at half
/// weight, computed by midranks.
inline double auc(const std::vector<double>& scores, const std::vector<bool>& redundant) {
    if (scores.size() != redundant.size())
        throw consistency_error("auc: score/label count mismatch");
    std::size_t pos = 0;
    for (bool r : redundant) pos += r ? 1 : 0;
    const std::size_t neg = redundant.size() - pos;
    if (pos == 0 || neg == 0) throw degenerate_data_error("auc: need both classes");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j); // 1-based average rank
        for (std::size_t k = i; k < j; ++k)
            if (redundant[order[k]]) rank_sum_pos += midrank;
        i = j;
    }
    return (rank_sum_pos - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1)) /
           (static_cast<double>(pos) * static_cast<double>(neg));
}

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

/// Operating points for "score > threshold flags redundant", one per
/// achievable classification, thresholds ascending. The first point (just
/// below the minimum score) flags everything.
inline std::vector<RocPoint> roc_curve(const std::vector<double>& scores,
                                       const std::vector<bool>& redundant) {
    if (scores.size() != redundant.size())
        throw consistency_error("roc_curve: score/label count mismatch");
    std::size_t pos = 0;
    for (bool r : redundant) pos += r ? 1 : 0;
    const std::size_t neg = redundant.size() - pos;
    if (pos == 0 || neg == 0) throw degenerate_data_error("roc_curve: need both classes");

    std::vector<double> thresholds = scores;
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.insert(thresholds.begin(), thresholds.front() - 1.0);

    std::vector<RocPoint> out;
    out.reserve(thresholds.size());
    for (double thr : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t k = 0; k < scores.size(); ++k) {
            if (scores[k] > thr) {
                if (redundant[k]) ++tp;
                else ++fp;
            }
        }
        out.push_back({thr, static_cast<double>(tp) / static_cast<double>(pos),
                       static_cast<double>(fp) / static_cast<double>(neg)});
    }
    return out;
}

/// Threshold maximizing Youden's J = TPR - FPR; the first maximum in
/// ascending threshold order wins, which prefers flagging more points.
inline double youden_threshold(const std::vector<double>& scores,
                               const std::vector<bool>& redundant) {
    const auto curve = roc_curve(scores, redundant);
    double best_j = -2.0;
    double best_thr = curve.front().threshold;
    for (const auto& pt : curve) {
        const double j = pt.tpr - pt.fpr;
        if (j > best_j) {
            best_j = j;
            best_thr = pt.threshold;
        }
    }
    return best_thr;
}

} // namespace ipkit
