#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "posebank/image.hpp"
#include "posebank/inpaint.hpp"
#include "posebank/tps.hpp"

using namespace posebank;

namespace {

std::vector<Point2> random_control_points(Rng& rng, std::size_t count, double lo, double hi) {
    // rejection-sample until pairwise distinct with a margin; corners pin the
    // set away from collinearity
    std::vector<Point2> pts = {{lo, lo}, {hi, lo}, {lo, hi}, {hi, hi}};
    while (pts.size() < count) {
        const Point2 p{rng.uniform(lo, hi), rng.uniform(lo, hi)};
        bool ok = true;
        for (const Point2& q : pts) {
            const double dx = p.x - q.x;
            const double dy = p.y - q.y;
            if (dx * dx + dy * dy < 4.0) ok = false;
        }
        if (ok) pts.push_back(p);
    }
    return pts;
}

ImageGrid checkerboard(int size, int cell) {
    ImageGrid img(size, size, 1);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            img.at(x, y, 0) = ((x / cell + y / cell) % 2 == 0) ? 255.0 : 0.0;
        }
    }
    return img;
}

}  // namespace

TEST_CASE("tps identity has identity affine and zero bending", "[tps]") {
    Rng rng(3);
    const auto pts = random_control_points(rng, 9, 0.0, 100.0);
    const ThinPlateTransform t = tps_fit(pts, pts, 0.0);
    CHECK(t.max_bending_weight() <= 1e-8);
    CHECK(t.affine(0, 0) == Catch::Approx(0.0).margin(1e-8));
    CHECK(t.affine(1, 0) == Catch::Approx(1.0).margin(1e-8));
    CHECK(t.affine(2, 0) == Catch::Approx(0.0).margin(1e-8));
    CHECK(t.affine(0, 1) == Catch::Approx(0.0).margin(1e-8));
    CHECK(t.affine(1, 1) == Catch::Approx(0.0).margin(1e-8));
    CHECK(t.affine(2, 1) == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("tps pure translation keeps bending weights at zero", "[tps]") {
    Rng rng(5);
    const auto src = random_control_points(rng, 8, 0.0, 60.0);
    std::vector<Point2> dst;
    for (const Point2& p : src) dst.push_back({p.x + 5.0, p.y});
    const ThinPlateTransform t = tps_fit(src, dst, 0.0);
    CHECK(t.max_bending_weight() <= 1e-8);
    const Point2 probe = t.apply({10.0, 20.0});
    CHECK(probe.x == Catch::Approx(15.0).margin(1e-6));
    CHECK(probe.y == Catch::Approx(20.0).margin(1e-6));
}

TEST_CASE("tps interpolates control points exactly at lambda 0", "[tps]") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t count = 5 + rng.uniform_index(12);
        const auto src = random_control_points(rng, count, 0.0, 120.0);
        std::vector<Point2> dst;
        for (const Point2& p : src) {
            dst.push_back({p.x + rng.uniform(-8.0, 8.0), p.y + rng.uniform(-8.0, 8.0)});
        }
        const ThinPlateTransform t = tps_fit(src, dst, 0.0);
        for (std::size_t i = 0; i < src.size(); ++i) {
            const Point2 mapped = t.apply(src[i]);
            CHECK(std::abs(mapped.x - dst[i].x) <= 1e-6);
            CHECK(std::abs(mapped.y - dst[i].y) <= 1e-6);
        }
    }
}

TEST_CASE("tps side conditions hold for every fitted transform", "[tps]") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto src = random_control_points(rng, 10, 0.0, 80.0);
        std::vector<Point2> dst;
        for (const Point2& p : src) {
            dst.push_back({p.x + rng.uniform(-6.0, 6.0), p.y + rng.uniform(-6.0, 6.0)});
        }
        const ThinPlateTransform t = tps_fit(src, dst, trial % 2 == 0 ? 0.0 : 0.5);
        for (int dim = 0; dim < 2; ++dim) {
            double sum = 0.0, sum_x = 0.0, sum_y = 0.0;
            for (std::size_t i = 0; i < src.size(); ++i) {
                const double w = t.bending_weights(static_cast<Eigen::Index>(i), dim);
                sum += w;
                sum_x += w * src[i].x;
                sum_y += w * src[i].y;
            }
            CHECK(std::abs(sum) <= 1e-8);
            CHECK(std::abs(sum_x) <= 1e-8);
            CHECK(std::abs(sum_y) <= 1e-8);
        }
    }
}

TEST_CASE("tps rejects degenerate control geometry", "[tps]") {
    // collinear
    std::vector<Point2> line = {{0, 0}, {10, 0}, {20, 0}, {30, 0}};
    CHECK_THROWS_AS(tps_fit(line, line, 0.0), DegenerateGeometryError);
    // duplicate points
    std::vector<Point2> dup = {{0, 0}, {0, 0}, {10, 10}, {0, 10}};
    CHECK_THROWS_AS(tps_fit(dup, dup, 0.0), DegenerateGeometryError);
    // too few
    std::vector<Point2> two = {{0, 0}, {10, 10}};
    CHECK_THROWS_AS(tps_fit(two, two, 0.0), ParameterError);
}

TEST_CASE("warp_image under the identity transform is a pixel identity", "[tps]") {
    Rng rng(13);
    ImageGrid img(32, 24, 3);
    for (double& p : img.pixels) p = std::floor(rng.uniform(0.0, 256.0));
    std::vector<Point2> pts = {{0, 0}, {31, 0}, {0, 23}, {31, 23}, {15, 11}};
    const ThinPlateTransform t = tps_fit(pts, pts, 0.0);
    const ImageGrid out = warp_image(img, t);
    CHECK(out.invalid_count() == 0);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        CHECK(std::abs(out.pixels[i] - img.pixels[i]) <= 1e-6);
    }
}

TEST_CASE("warp_image translation marks the unsourced strip invalid", "[tps]") {
    ImageGrid img(40, 20, 1);
    for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 40; ++x) img.at(x, y, 0) = x;
    }
    // transform maps output pixels 10 columns to the right in the source
    std::vector<Point2> src = {{0, 0}, {39, 0}, {0, 19}, {39, 19}};
    std::vector<Point2> dst;
    for (const Point2& p : src) dst.push_back({p.x + 10.0, p.y});
    const ThinPlateTransform t = tps_fit(src, dst, 0.0);
    const ImageGrid out = warp_image(img, t);
    CHECK(out.invalid_count() == 10 * 20);
    for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 30; ++x) {
            CHECK(out.at(x, y, 0) == Catch::Approx(x + 10.0).margin(1e-9));
            CHECK(out.is_valid(x, y));
        }
        for (int x = 30; x < 40; ++x) CHECK_FALSE(out.is_valid(x, y));
    }
}

TEST_CASE("warp_image 90 degree rotation matches the direct rotation oracle", "[tps]") {
    const int size = 65;  // odd: rotation about the center maps pixels to pixels
    const ImageGrid img = checkerboard(size, 8);
    const double c = 0.5 * (size - 1);

    // control points realize the inverse (backward) rotation exactly
    std::vector<Point2> out_pts, in_pts;
    for (double gx : {0.0, 16.0, 32.0, 48.0, 64.0}) {
        for (double gy : {0.0, 32.0, 64.0}) {
            out_pts.push_back({gx, gy});
            // backward map of a +90 degree rotation: rotate output by -90
            in_pts.push_back({c + (gy - c), c - (gx - c)});
        }
    }
    const ThinPlateTransform t = tps_fit(out_pts, in_pts, 0.0);
    const ImageGrid out = warp_image(img, t);
    CHECK(out.invalid_count() == 0);

    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const int sx = static_cast<int>(std::lround(c + (y - c)));
            const int sy = static_cast<int>(std::lround(c - (x - c)));
            CHECK(std::abs(out.at(x, y, 0) - img.at(sx, sy, 0)) <= 1.0);
        }
    }
}

TEST_CASE("inpaint with an empty mask returns the image unchanged", "[tps]") {
    Rng rng(17);
    ImageGrid img(16, 16, 1);
    for (double& p : img.pixels) p = std::floor(rng.uniform(0.0, 256.0));
    const ImageGrid out = inpaint_telea(img, 3.0);
    CHECK(out.pixels == img.pixels);
}

TEST_CASE("inpaint fills holes in a constant image with the constant", "[tps]") {
    ImageGrid img(24, 24, 3);
    for (double& p : img.pixels) p = 137.0;
    for (int y = 8; y < 15; ++y) {
        for (int x = 9; x < 16; ++x) {
            img.set_valid(x, y, false);
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = 0.0;
        }
    }
    const ImageGrid out = inpaint_telea(img, 3.0);
    CHECK(out.invalid_count() == 0);
    for (const double p : out.pixels) {
        CHECK(p == Catch::Approx(137.0).margin(1e-6));
    }
}

TEST_CASE("inpaint recovers a single missing pixel of a linear gradient", "[tps]") {
    ImageGrid img(21, 21, 1);
    for (int y = 0; y < 21; ++y) {
        for (int x = 0; x < 21; ++x) img.at(x, y, 0) = 3.0 * x + 2.0 * y + 10.0;
    }
    const double truth = img.at(10, 12, 0);
    img.set_valid(10, 12, false);
    img.at(10, 12, 0) = 0.0;
    const ImageGrid out = inpaint_telea(img, 3.0);
    CHECK(std::abs(out.at(10, 12, 0) - truth) <= 2.0);
}

TEST_CASE("inpaint larger gradient hole stays close to the reference plane", "[tps]") {
    ImageGrid img(31, 31, 1);
    for (int y = 0; y < 31; ++y) {
        for (int x = 0; x < 31; ++x) img.at(x, y, 0) = 4.0 * x + 20.0;
    }
    ImageGrid truth = img;
    for (int y = 13; y < 18; ++y) {
        for (int x = 13; x < 18; ++x) {
            img.set_valid(x, y, false);
            img.at(x, y, 0) = 0.0;
        }
    }
    const ImageGrid out = inpaint_telea(img, 3.0);
    CHECK(out.invalid_count() == 0);
    for (int y = 13; y < 18; ++y) {
        for (int x = 13; x < 18; ++x) {
            CHECK(std::abs(out.at(x, y, 0) - truth.at(x, y, 0)) <= 8.0);
        }
    }
}

TEST_CASE("inpaint refuses a fully masked image", "[tps]") {
    ImageGrid img(8, 8, 1);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) img.set_valid(x, y, false);
    }
    CHECK_THROWS_AS(inpaint_telea(img, 3.0), ParameterError);
}
