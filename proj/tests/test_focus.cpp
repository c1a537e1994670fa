// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scenes.hpp"
#include "tlens/focus.hpp"

namespace tlens {
namespace {

TEST(FocusFromSaliency, UniformSaliencyGivesMeanDepth) {
    DepthMap<double> depth(3, 2, 1, {1, 2, 3, 4, 5, 9});
    SaliencyMap<double> sal(3, 2, 1, 0.7);
    const auto est = focus_from_saliency(depth, sal);
    EXPECT_NEAR(est.focus_distance, 4.0, 1e-12);
    EXPECT_EQ(est.source, FocusSource::SaliencyWeighted);
}

TEST(FocusFromSaliency, DeltaSaliencyPicksThatPixel) {
    DepthMap<double> depth(3, 2, 1, {1, 2, 3, 4, 5, 9});
    SaliencyMap<double> sal(3, 2, 1, 0.0);
    sal(1, 1) = 1.0;
    EXPECT_EQ(focus_from_saliency(depth, sal).focus_distance, 5.0);
}

TEST(FocusFromSaliency, TwoTermWeightedMean) {
    DepthMap<double> depth(2, 1, 1, {1.0, 3.0});
    SaliencyMap<double> sal(2, 1, 1, {1.0, 3.0});
    EXPECT_DOUBLE_EQ(focus_from_saliency(depth, sal).focus_distance, 2.5);
}

TEST(FocusFromSaliency, ZeroMassIsAnError) {
    DepthMap<double> depth(2, 1, 1, {1.0, 3.0});
    SaliencyMap<double> sal(2, 1, 1, 0.0);
    try {
        focus_from_saliency(depth, sal);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroSaliencyMass);
    }
}

TEST(FocusFromSaliency, ShapeMismatch) {
    DepthMap<double> depth(2, 1, 1, 1.0);
    SaliencyMap<double> sal(1, 2, 1, 1.0);
    EXPECT_THROW(focus_from_saliency(depth, sal), Error);
}

TEST(FocusFromSaliency, ConvexAndScaleInvariant) {
    fixtures::Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const int w = 1 + rng.index(9), h = 1 + rng.index(9);
        DepthMap<double> depth(w, h, 1);
        SaliencyMap<double> sal(w, h, 1);
        for (double& d : depth.samples())
            d = rng.uniform(0.1, 100.0);
        for (double& s : sal.samples())
            s = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
        sal(0, 0) = 0.5;
        const double fd = focus_from_saliency(depth, sal).focus_distance;
        auto [lo, hi] = min_max(depth);
        EXPECT_GE(fd, lo);
        EXPECT_LE(fd, hi);
        EXPECT_NEAR(fd, oracle::weighted_focus(depth, sal), 1e-9);

        const double c = rng.uniform(1e-3, 1e3);
        for (double& s : sal.samples())
            s *= c;
        EXPECT_NEAR(focus_from_saliency(depth, sal).focus_distance, fd, 1e-9 * fd);
    }
}

TEST(StubSaliency, StrictlyPositive) {
    const auto scene = fixtures::golden_scene(4, 48);
    const auto sal = stub_saliency(scene.image, scene.depth);
    for (float v : sal.samples())
        EXPECT_GT(v, 0.0f);
}

TEST(StubSaliency, FlatDepthIsCenterPrior) {
    Image<double> img(9, 7, 3, 0.5);
    DepthMap<double> depth(9, 7, 1, 3.0);
    const auto sal = stub_saliency(img, depth);
    const double sigma = 0.25 * 7;
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 9; ++x) {
            const double r2 = (x - 4.0) * (x - 4.0) + (y - 3.0) * (y - 3.0);
            EXPECT_NEAR(sal(x, y), std::exp(-r2 / (2 * sigma * sigma)), 1e-12);
            EXPECT_LE(sal(x, y), sal(4, 3));
        }
}

TEST(StubSaliency, NearCenterPixelIsArgmax) {
    // sigma = 0.75; corners exp(-2/1.125) = 0.1690, edges exp(-1/1.125) = 0.4111
    Image<double> img(3, 3, 1, 0.5);
    DepthMap<double> depth(3, 3, 1, 2.0);
    depth(1, 1) = 1.0;
    const auto sal = stub_saliency(img, depth);
    EXPECT_NEAR(sal(1, 1), 1.0, 1e-12);
    EXPECT_NEAR(sal(0, 1), 0.5 * 0.41111229050718745, 1e-12);
    EXPECT_NEAR(sal(0, 0), 0.5 * 0.16901331540606619, 1e-12);
}

TEST(Huber, Values) {
    EXPECT_EQ(huber_loss(3.0, 3.0, 0.1), 0.0);
    EXPECT_NEAR(huber_loss(1.05, 1.0, 0.1), 0.00125, 1e-15);
    EXPECT_NEAR(huber_loss(1.3, 1.0, 0.1), 0.025, 1e-15);
    EXPECT_THROW(huber_loss(1.0, 1.0, 0.0), Error);
}

TEST(Huber, SymmetricQuadraticThenLinear) {
    fixtures::Rng rng(9);
    for (int i = 0; i < 500; ++i) {
        const double delta = rng.uniform(0.01, 2.0);
        const double e = rng.uniform(-5.0, 5.0);
        EXPECT_DOUBLE_EQ(huber_loss(e, 0.0, delta), huber_loss(-e, 0.0, delta));
        if (std::abs(e) <= delta) {
            EXPECT_DOUBLE_EQ(huber_loss(e, 0.0, delta), 0.5 * e * e);
        }
        // slope magnitude never exceeds delta
        const double h = 1e-6;
        const double slope = (huber_loss(e + h, 0.0, delta) - huber_loss(e - h, 0.0, delta)) / (2 * h);
        EXPECT_LE(std::abs(slope), delta + 1e-6);
    }
    // continuous first derivative at |e| = delta
    const double d = 0.1, h = 1e-7;
    const double left = (huber_loss(d, 0, d) - huber_loss(d - h, 0, d)) / h;
    const double right = (huber_loss(d + h, 0, d) - huber_loss(d, 0, d)) / h;
    EXPECT_NEAR(left, right, 1e-5);
}

TEST(ResolveLens, ExifPassThrough) {
    ExifRecord exif;
    exif.f_number = 1.8;
    exif.focal_length_mm = 50.0;
    LensOverrides o;
    o.focus_distance = 2.0;
    const auto lens = resolve_lens_params(exif, o, 1024);
    EXPECT_EQ(lens.f_number, 1.8);
    EXPECT_EQ(lens.focal_length, 50.0);
    EXPECT_EQ(lens.focus_scale, 1.0);
    EXPECT_DOUBLE_EQ(lens.pixels_per_unit, 1024 / 36.0);
    EXPECT_DOUBLE_EQ(lens.coc_max_px, 64.0);
}

TEST(ResolveLens, OverridesWin) {
    ExifRecord exif;
    exif.f_number = 1.8;
    LensOverrides o;
    o.f_number = 22.0;
    o.focus_distance = 2.0;
    const auto lens = resolve_lens_params(exif, o, 512);
    EXPECT_EQ(lens.f_number, 22.0);
    EXPECT_EQ(lens.focal_length, 50.0);
    EXPECT_DOUBLE_EQ(lens.coc_max_px, 32.0);
}

TEST(ResolveLens, MissingFNumberWithoutDefaults) {
    LensOverrides o;
    o.focal_length = 35.0;
    o.focus_distance = 2.0;
    try {
        resolve_lens_params(std::nullopt, o, 100, std::nullopt, ResolveOptions{false});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingParameter);
        EXPECT_NE(std::string(e.what()).find("f_number"), std::string::npos);
    }
}

TEST(ResolveLens, FocusFromSaliencyWhenNotOverridden) {
    LensOverrides o;
    const auto lens = resolve_lens_params(std::nullopt, o, 64, FocusEstimate{3.5, FocusSource::SaliencyWeighted});
    EXPECT_EQ(lens.focus_distance, 3.5);
    EXPECT_THROW(resolve_lens_params(std::nullopt, o, 64), Error);
}

TEST(ResolveLens, SingularIsRejected) {
    LensOverrides o;
    o.focal_length = 50.0;
    o.focus_distance = 50.0;
    try {
        resolve_lens_params(std::nullopt, o, 64);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SingularLens);
    }
}

} // namespace
} // namespace tlens
