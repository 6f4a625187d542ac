#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ipkit/ipkit.hpp"
#include "scenes.hpp"

using namespace ipkit;

namespace {

// Closed-form reference kernel: exp(-i^2 / (2 sigma^2)) over radius ceil(3 sigma),
// normalized to unit sum.
std::vector<double> reference_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

const double kPi = std::acos(-1.0);

} // namespace

TEST_CASE("point arithmetic") {
    Point a{3.0, 4.0};
    Point b{1.0, 1.0};
    REQUIRE(norm(a) == Catch::Approx(5.0));
    REQUIRE(distance(a, b) == Catch::Approx(std::hypot(2.0, 3.0)));
    Point s = a + b;
    Point d = a - b;
    REQUIRE(s.x == 4.0);
    REQUIRE(s.y == 5.0);
    REQUIRE(d.x == 2.0);
    REQUIRE(d.y == 3.0);
}

TEST_CASE("image construction and access") {
    Image img(4, 3, 7.0);
    REQUIRE(img.width() == 4);
    REQUIRE(img.height() == 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) REQUIRE(img.at(x, y) == 7.0);

    std::vector<double> px = {1, 2, 3, 4, 5, 6};
    Image from_vec(3, 2, px);
    REQUIRE(from_vec.at(0, 0) == 1.0);
    REQUIRE(from_vec.at(2, 1) == 6.0);

    REQUIRE_THROWS_AS(Image(3, 2, std::vector<double>{1, 2, 3}), parameter_error);
    REQUIRE_THROWS_AS(Image(0, 2, 0.0), parameter_error);
    REQUIRE_THROWS_AS(Image(2, -1, 0.0), parameter_error);
}

TEST_CASE("domain membership and clamped access") {
    Image img(5, 4, 0.0);
    img.at(4, 3) = 9.0;
    REQUIRE(img.in_domain({0.0, 0.0}));
    REQUIRE(img.in_domain({4.0, 3.0}));
    REQUIRE_FALSE(img.in_domain({4.0001, 3.0}));
    REQUIRE_FALSE(img.in_domain({-0.0001, 0.0}));
    REQUIRE(img.at_clamped(100, 100) == 9.0);
    REQUIRE(img.at_clamped(-5, -5) == 0.0);
}

TEST_CASE("bilinear interpolation with zero fill") {
    // I(x, y) = 10 x + 3 y is reproduced exactly inside the pixel grid.
    Image img(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) img.at(x, y) = 10.0 * x + 3.0 * y;
    REQUIRE(img.bilinear_zero(1.25, 2.5) == Catch::Approx(10.0 * 1.25 + 3.0 * 2.5));
    REQUIRE(img.bilinear_zero(2.0, 1.0) == Catch::Approx(23.0));
    // Taps outside the grid read as zero, so values fade toward the border.
    REQUIRE(img.bilinear_zero(-1.0, 0.0) == 0.0);
    REQUIRE(img.bilinear_zero(-0.5, 0.0) == Catch::Approx(0.0));
    REQUIRE(img.bilinear_zero(3.5, 0.0) == Catch::Approx(0.5 * 30.0));
}

TEST_CASE("gaussian smoothing preserves constants") {
    Image img(9, 9, 42.0);
    Image out = gaussian_smooth(img, 1.7);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x) REQUIRE(out.at(x, y) == Catch::Approx(42.0).margin(1e-12));
}

TEST_CASE("gaussian smoothing of an impulse is the separable kernel product") {
    const double sigma = 1.0;
    const std::vector<double> k = reference_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);

    Image img(15, 15, 0.0);
    img.at(7, 7) = 1.0;
    Image out = gaussian_smooth(img, sigma);

    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            const double expected = k[dx + radius] * k[dy + radius];
            REQUIRE(out.at(7 + dx, 7 + dy) == Catch::Approx(expected).margin(1e-12));
        }
    // Beyond the kernel footprint nothing leaks.
    REQUIRE(out.at(7 + radius + 1, 7) == 0.0);
    REQUIRE(out.at(0, 0) == 0.0);

    double sum = 0.0;
    for (double v : out.data()) sum += v;
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("smoothing output stays within the input range") {
    Image img = scenes::blob_scene();
    double lo = 1e18, hi = -1e18;
    for (double v : img.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Image out = gaussian_smooth(img, 2.5);
    for (double v : out.data()) {
        REQUIRE(v >= lo - 1e-9);
        REQUIRE(v <= hi + 1e-9);
        REQUIRE(std::isfinite(v));
    }
}

TEST_CASE("gaussian smoothing rejects nonpositive sigma") {
    Image img(5, 5, 0.0);
    REQUIRE_THROWS_AS(gaussian_smooth(img, 0.0), parameter_error);
    REQUIRE_THROWS_AS(gaussian_smooth(img, -1.0), parameter_error);
}

TEST_CASE("gradient of linear ramps") {
    Image img(7, 6);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 7; ++x) img.at(x, y) = 2.0 * x + 3.0 * y;
    auto [gx, gy] = gradient(img);
    // Central and one-sided differences agree exactly on a linear ramp.
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 7; ++x) {
            REQUIRE(gx.at(x, y) == Catch::Approx(2.0).margin(1e-12));
            REQUIRE(gy.at(x, y) == Catch::Approx(3.0).margin(1e-12));
        }
}

TEST_CASE("gradient of a constant image is zero") {
    Image img(5, 5, 11.0);
    auto [gx, gy] = gradient(img);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) {
            REQUIRE(gx.at(x, y) == 0.0);
            REQUIRE(gy.at(x, y) == 0.0);
        }
}

TEST_CASE("gradient requires at least 3x3") {
    REQUIRE_THROWS_AS(gradient(Image(2, 5, 0.0)), parameter_error);
    REQUIRE_THROWS_AS(gradient(Image(5, 2, 0.0)), parameter_error);
}

TEST_CASE("laplacian of quadratic and impulse inputs") {
    Image quad(9, 9);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x) quad.at(x, y) = static_cast<double>(x) * x;
    Image lq = laplacian(quad);
    for (int y = 1; y < 8; ++y)
        for (int x = 1; x < 8; ++x) REQUIRE(lq.at(x, y) == Catch::Approx(2.0).margin(1e-12));
    // Border ring is defined as zero.
    REQUIRE(lq.at(0, 4) == 0.0);
    REQUIRE(lq.at(8, 4) == 0.0);
    REQUIRE(lq.at(4, 0) == 0.0);

    Image imp(7, 7, 0.0);
    imp.at(3, 3) = 1.0;
    Image li = laplacian(imp);
    REQUIRE(li.at(3, 3) == -4.0);
    REQUIRE(li.at(2, 3) == 1.0);
    REQUIRE(li.at(4, 3) == 1.0);
    REQUIRE(li.at(3, 2) == 1.0);
    REQUIRE(li.at(3, 4) == 1.0);
    REQUIRE(li.at(2, 2) == 0.0);

    Image flat(6, 6, 3.0);
    const Image lf = laplacian(flat);
    for (double v : lf.data()) REQUIRE(v == 0.0);

    REQUIRE_THROWS_AS(laplacian(Image(2, 6, 0.0)), parameter_error);
}

TEST_CASE("transform application basics") {
    Point p{1.0, 0.0};
    REQUIRE(distance(apply_transform(identity_transform(), p), p) == 0.0);

    Point q = apply_transform(translation_transform(3.0, -2.0), p);
    REQUIRE(q.x == 4.0);
    REQUIRE(q.y == -2.0);

    // Quarter turn, scale 2: (1, 0) lands on (0, 2).
    Point r = apply_transform(similarity_transform(2.0, kPi / 2.0, 0.0, 0.0), p);
    REQUIRE(std::abs(r.x - 0.0) < 1e-12);
    REQUIRE(std::abs(r.y - 2.0) < 1e-12);

    Point c = apply_transform(similarity_about({5.0, 5.0}, 1.0, 1.234), {5.0, 5.0});
    REQUIRE(std::abs(c.x - 5.0) < 1e-12);
    REQUIRE(std::abs(c.y - 5.0) < 1e-12);
}

TEST_CASE("inverse round trip over random transforms") {
    Rng rng(314);
    for (int trial = 0; trial < 1000; ++trial) {
        Transform t = similarity_transform(rng.uniform(0.5, 2.0), rng.uniform(-3.0, 3.0),
                                           rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0));
        Transform ti = invert(t);
        Point p{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)};
        Point back = apply_transform(ti, apply_transform(t, p));
        REQUIRE(distance(back, p) < 1e-9);

        Transform round = compose(ti, t);
        Point via = apply_transform(round, p);
        REQUIRE(distance(via, p) < 1e-9);
    }
}

TEST_CASE("compose applies the right-hand transform first") {
    Transform scale2 = similarity_transform(2.0, 0.0, 0.0, 0.0);
    Transform shift = translation_transform(1.0, 0.0);
    // compose(a, b) = a after b.
    Point p = apply_transform(compose(scale2, shift), {0.0, 0.0});
    REQUIRE(p.x == Catch::Approx(2.0));
    Point q = apply_transform(compose(shift, scale2), {0.0, 0.0});
    REQUIRE(q.x == Catch::Approx(1.0));

    Transform aff = affine_transform(1.0, 0.5, 0.0, 1.0, 0.0, 0.0);
    REQUIRE(compose(aff, shift).kind == TransformKind::affine);
    REQUIRE(compose(shift, shift).kind == TransformKind::similarity);
}

TEST_CASE("near-singular transforms cannot be inverted") {
    Transform t = affine_transform(1e-13, 0.0, 0.0, 1e-13, 0.0, 0.0);
    REQUIRE_THROWS_AS(invert(t), singularity_error);
}

TEST_CASE("transform construction is validated") {
    REQUIRE_THROWS_AS(affine_transform(1.0, 2.0, 2.0, 4.0, 0.0, 0.0), parameter_error);
    const double inf = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(translation_transform(inf, 0.0), parameter_error);
    REQUIRE_THROWS_AS(similarity_transform(0.0, 0.0, 0.0, 0.0), parameter_error);
    REQUIRE_THROWS_AS(similarity_transform(-1.0, 0.0, 0.0, 0.0), parameter_error);
    // A shear matrix is not accepted under the similarity kind.
    REQUIRE_THROWS_AS(
        make_transform(TransformKind::similarity, {{{1.0, 0.5}, {0.0, 1.0}}}, {0.0, 0.0}),
        parameter_error);
    REQUIRE_NOTHROW(
        make_transform(TransformKind::affine, {{{1.0, 0.5}, {0.0, 1.0}}}, {0.0, 0.0}));
}

TEST_CASE("transform ids distinguish transforms") {
    Transform a = similarity_transform(1.0, 0.0, 2.0, 3.0);
    Transform b = similarity_transform(1.0, 0.0, 2.0, 4.0);
    REQUIRE(transform_id(a) == transform_id(a));
    REQUIRE(transform_id(a) != transform_id(b));
    REQUIRE(transform_id(identity_transform()) == "similarity[1 0; 0 1]+(0, 0)");
}

TEST_CASE("warp by the identity is exact") {
    Image img = scenes::blob_scene();
    REQUIRE(warp(img, identity_transform()) == img);
}

TEST_CASE("warp by an integer translation shifts indices") {
    Image img(10, 8);
    Rng rng(77);
    for (double& v : img.data()) v = rng.uniform(0.0, 255.0);
    Image out = warp(img, translation_transform(3.0, 0.0));
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 10; ++x) {
            const double expected = (x >= 3) ? img.at(x - 3, y) : 0.0;
            REQUIRE(out.at(x, y) == Catch::Approx(expected).margin(1e-12));
        }
}

TEST_CASE("warp of a symmetric image by a half turn") {
    // A centered blob is invariant under rotation by pi about its center.
    Image img(31, 31, 0.0);
    scenes::add_blob(img, 15.0, 15.0, 100.0, 3.0);
    Image out = warp(img, similarity_about({15.0, 15.0}, 1.0, kPi));
    for (int y = 1; y < 30; ++y)
        for (int x = 1; x < 30; ++x)
            REQUIRE(out.at(x, y) == Catch::Approx(img.at(x, y)).margin(1e-9));
}

TEST_CASE("noise is clamped, seeded, and validated") {
    Image img(16, 16, 250.0);
    Rng rng(9);
    Image noisy = add_gaussian_noise(img, 50.0, rng);
    bool clipped = false;
    for (double v : noisy.data()) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 255.0);
        if (v == 255.0) clipped = true;
    }
    REQUIRE(clipped);

    Rng r1(123), r2(123);
    Image a = add_gaussian_noise(img, 2.0, r1);
    Image b = add_gaussian_noise(img, 2.0, r2);
    REQUIRE(a == b);

    Rng r3(1);
    Image same = add_gaussian_noise(img, 0.0, r3);
    REQUIRE(same == img);
    Rng r4(1);
    REQUIRE_THROWS_AS(add_gaussian_noise(img, -0.5, r4), parameter_error);
}

TEST_CASE("random number generator contract") {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) REQUIRE(a.uniform() == b.uniform());
    Rng c(6);
    for (int i = 0; i < 1000; ++i) {
        double u = c.uniform(2.0, 3.0);
        REQUIRE(u >= 2.0);
        REQUIRE(u < 3.0);
        std::uint64_t k = c.integer(2, 7);
        REQUIRE(k >= 2);
        REQUIRE(k <= 7);
        REQUIRE(std::isfinite(c.normal(0.0, 1.0)));
    }
    REQUIRE_THROWS_AS(c.integer(3, 2), parameter_error);
}
