#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "posekit/heatmap.hpp"

using namespace posekit;

namespace {

DetectionBox make_box(double x0, double y0, double x1, double y1) {
    DetectionBox b;
    b.x0 = x0;
    b.y0 = y0;
    b.x1 = x1;
    b.y1 = y1;
    b.score = 1.0;
    return b;
}

Heatmap random_heatmap(std::mt19937& rng, int j = 2, int h = 12, int w = 10) {
    std::uniform_real_distribution<float> d(0.f, 1.f);
    Heatmap hm(j, h, w);
    for (auto& v : hm.values) v = d(rng);
    return hm;
}

// Test-side bilinear evaluation with zero padding, independent of the
// resampling implementation.
double bilinear_oracle(const Heatmap& h, int j, double x, double y) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double ax = x - x0;
    const double ay = y - y0;
    auto tap = [&](int yy, int xx) -> double {
        if (xx < 0 || yy < 0 || xx >= h.width || yy >= h.height) return 0.0;
        return h.at(j, yy, xx);
    };
    return (1 - ax) * (1 - ay) * tap(y0, x0) + ax * (1 - ay) * tap(y0, x0 + 1) +
           (1 - ax) * ay * tap(y0 + 1, x0) + ax * ay * tap(y0 + 1, x0 + 1);
}

} // namespace

TEST(BoxToCrop, AlreadyAtTargetAspectIsIdentityLike) {
    const auto t =
        box_to_crop_transform(make_box(0, 0, 192, 256), 3, 4, 192, 256, 1.0);
    const Vec2 a = t.apply(0, 0);
    const Vec2 b = t.apply(192, 256);
    EXPECT_NEAR(a.x, 0, 1e-9);
    EXPECT_NEAR(a.y, 0, 1e-9);
    EXPECT_NEAR(b.x, 192, 1e-9);
    EXPECT_NEAR(b.y, 256, 1e-9);
}

TEST(BoxToCrop, NarrowBoxExpandsInWidthAboutCenter) {
    // target width 256 * 3/4 = 192, so the left edge sits at 50 - 96 = -46
    const auto t =
        box_to_crop_transform(make_box(0, 0, 100, 256), 3, 4, 192, 256, 1.0);
    const Vec2 corner = t.apply(0, 0);
    EXPECT_NEAR(corner.x, -46.0, 1e-9);
    EXPECT_NEAR(corner.y, 0.0, 1e-9);
}

TEST(BoxToCrop, CenterMapsToCropCenter) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> d(5.0, 100.0);
    for (double scale : {0.7, 1.0, 1.3}) {
        const auto box = make_box(d(rng), d(rng), 150 + d(rng), 150 + d(rng));
        const auto t = box_to_crop_transform(box, 3, 4, 48, 64, scale);
        const Vec2 c = t.apply(24, 32);
        EXPECT_NEAR(c.x, box.center().x, 1e-9);
        EXPECT_NEAR(c.y, box.center().y, 1e-9);
    }
}

TEST(BoxToCrop, NeverShrinksTheBox) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> d(1.0, 80.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto box = make_box(d(rng), d(rng), 81 + d(rng), 81 + d(rng));
        for (double scale : {1.0, 1.3}) {
            const auto t = box_to_crop_transform(box, 3, 4, 48, 64, scale);
            const Vec2 tl = t.apply(0, 0);
            const Vec2 br = t.apply(48, 64);
            EXPECT_LE(tl.x, box.x0 + 1e-9);
            EXPECT_LE(tl.y, box.y0 + 1e-9);
            EXPECT_GE(br.x, box.x1 - 1e-9);
            EXPECT_GE(br.y, box.y1 - 1e-9);
        }
    }
}

TEST(BoxToCrop, DegenerateBoxRejected) {
    EXPECT_THROW(box_to_crop_transform(make_box(5, 5, 5, 10), 3, 4, 48, 64, 1.0),
                 InvalidInputError);
    EXPECT_THROW(box_to_crop_transform(make_box(0, 0, 10, 10), 3, 4, 48, 64, 0.0),
                 InvalidInputError);
}

TEST(FlipHeatmap, ConstantFieldUnchangedWithoutPairs) {
    Heatmap h(1, 4, 4);
    for (auto& v : h.values) v = 0.7f;
    const Heatmap f = flip_heatmap(h, {});
    for (float v : f.values) EXPECT_FLOAT_EQ(v, 0.7f);
}

TEST(FlipHeatmap, MirrorThenShiftReplicatesEdge) {
    Heatmap h(1, 2, 4);
    const float row[4] = {1, 2, 3, 4};
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 4; ++x) h.at(0, y, x) = row[x];
    const Heatmap f = flip_heatmap(h, {}, true);
    const float expect[4] = {4, 4, 3, 2};
    for (int x = 0; x < 4; ++x) EXPECT_FLOAT_EQ(f.at(0, 0, x), expect[x]);
}

TEST(FlipHeatmap, PairsSwapChannels) {
    std::mt19937 rng(17);
    Heatmap h = random_heatmap(rng, 2, 6, 8);
    const Heatmap f = flip_heatmap(h, {{0, 1}}, false);
    for (int y = 0; y < h.height; ++y)
        for (int x = 0; x < h.width; ++x)
            EXPECT_FLOAT_EQ(f.at(0, y, x), h.at(1, y, h.width - 1 - x));
}

TEST(FlipHeatmap, InvolutionWithShiftDisabled) {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Heatmap h = random_heatmap(rng, 4, 9, 7);
        const Heatmap back = flip_heatmap(flip_heatmap(h, {{0, 1}, {2, 3}}, false),
                                          {{0, 1}, {2, 3}}, false);
        ASSERT_EQ(back.values.size(), h.values.size());
        for (size_t i = 0; i < h.values.size(); ++i)
            EXPECT_FLOAT_EQ(back.values[i], h.values[i]);
    }
}

TEST(FlipHeatmap, OutOfRangePairRejected) {
    Heatmap h(2, 4, 4);
    EXPECT_THROW(flip_heatmap(h, {{0, 5}}), InvalidInputError);
}

TEST(FuseHeatmaps, SingleInputIsIdentity) {
    std::mt19937 rng(31);
    const Heatmap h = random_heatmap(rng);
    const Heatmap f = fuse_heatmaps({h}, {1.0});
    for (size_t i = 0; i < h.values.size(); ++i)
        EXPECT_NEAR(f.values[i], h.values[i], 1e-7);
}

TEST(FuseHeatmaps, AveragingEqualInputsIsIdempotent) {
    std::mt19937 rng(37);
    const Heatmap h = random_heatmap(rng);
    const Heatmap f = fuse_heatmaps({h, h}, {1.0, 1.0});
    for (size_t i = 0; i < h.values.size(); ++i)
        EXPECT_NEAR(f.values[i], h.values[i], 1e-7);
}

TEST(FuseHeatmaps, InvariantUnderUniformWeightRescaling) {
    std::mt19937 rng(41);
    const Heatmap a = random_heatmap(rng);
    Heatmap b = a;
    for (auto& v : b.values) v *= 0.5f;
    const Heatmap f1 = fuse_heatmaps({a, b}, {1.0, 3.0});
    const Heatmap f2 = fuse_heatmaps({a, b}, {10.0, 30.0});
    for (size_t i = 0; i < f1.values.size(); ++i)
        EXPECT_NEAR(f1.values[i], f2.values[i], 1e-9);
}

TEST(FuseHeatmaps, RejectsShapeMismatchAndEmptyInput) {
    Heatmap a(1, 4, 4), b(1, 4, 5);
    EXPECT_THROW(fuse_heatmaps({a, b}, {1.0, 1.0}), InvalidInputError);
    EXPECT_THROW(fuse_heatmaps({}, {}), InvalidInputError);
    EXPECT_THROW(fuse_heatmaps({a, a}, {0.0, 0.0}), InvalidInputError);
}

TEST(ResampleHeatmap, OwnGridIsIdentity) {
    std::mt19937 rng(43);
    const Heatmap h = random_heatmap(rng);
    const Heatmap r = resample_heatmap(h, h.transform, h.height, h.width);
    for (size_t i = 0; i < h.values.size(); ++i)
        EXPECT_NEAR(r.values[i], h.values[i], 1e-6);
}

TEST(ResampleHeatmap, ConstantPreservedOnInteriorGrid) {
    Heatmap h(1, 8, 8);
    for (auto& v : h.values) v = 0.4f;
    // interior-only target: shifted by one cell, half the extent
    AffineTransform target;
    target.m = {0.5, 0, 1.0, 0, 0.5, 1.0};
    const Heatmap r = resample_heatmap(h, target, 8, 8);
    for (float v : r.values) EXPECT_NEAR(v, 0.4f, 1e-6);
}

TEST(ResampleHeatmap, UpsampledPeakMatchesBilinearOracle) {
    Heatmap h(1, 8, 8);
    h.at(0, 3, 4) = 1.f;
    AffineTransform target; // 2x upsample of the same image region
    target.m = {0.5, 0, 0, 0, 0.5, 0};
    const Heatmap r = resample_heatmap(h, target, 16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            EXPECT_NEAR(r.at(0, y, x), bilinear_oracle(h, 0, x * 0.5, y * 0.5), 1e-6)
                << "at " << x << "," << y;
    // peak value preserved at the mapped location
    EXPECT_NEAR(r.at(0, 6, 8), 1.0, 1e-6);
}

TEST(DecodeKeypoints, SymmetricNeighborsGiveNoShift) {
    Heatmap h(1, 12, 12);
    for (auto& v : h.values) v = 0.1f;
    h.at(0, 5, 7) = 1.0f; // y=5, x=7
    const Pose p = decode_keypoints(h);
    EXPECT_DOUBLE_EQ(p.keypoints[0].x, 7.0);
    EXPECT_DOUBLE_EQ(p.keypoints[0].y, 5.0);
    EXPECT_DOUBLE_EQ(p.keypoints[0].score, 1.0);
}

TEST(DecodeKeypoints, QuarterShiftTowardLargerNeighbors) {
    Heatmap h(1, 12, 12);
    h.at(0, 7, 5) = 1.0f;  // peak at x=5, y=7
    h.at(0, 7, 6) = 0.6f;  // right neighbor larger than left
    h.at(0, 7, 4) = 0.3f;
    h.at(0, 8, 5) = 0.5f;  // lower neighbor larger than upper
    h.at(0, 6, 5) = 0.2f;
    const Pose p = decode_keypoints(h);
    EXPECT_DOUBLE_EQ(p.keypoints[0].x, 5.25);
    EXPECT_DOUBLE_EQ(p.keypoints[0].y, 7.25);
}

TEST(DecodeKeypoints, AllZeroChannelTakesLowestLinearIndex) {
    Heatmap h(1, 6, 6);
    const Pose p = decode_keypoints(h);
    EXPECT_DOUBLE_EQ(p.keypoints[0].x, 0.0);
    EXPECT_DOUBLE_EQ(p.keypoints[0].y, 0.0);
    EXPECT_DOUBLE_EQ(p.keypoints[0].score, 0.0);
}

TEST(DecodeKeypoints, NanRejected) {
    Heatmap h(1, 4, 4);
    h.at(0, 1, 1) = std::numeric_limits<float>::quiet_NaN();
    EXPECT_THROW(decode_keypoints(h), InvalidInputError);
}

TEST(DecodeKeypoints, EquivariantUnderBoxTranslation) {
    std::mt19937 rng(53);
    std::uniform_real_distribution<float> d(0.f, 1.f);
    for (int trial = 0; trial < 20; ++trial) {
        Heatmap h(3, 16, 12, box_to_crop_transform(make_box(10, 20, 58, 84), 3,
                                                   4, 12, 16, 1.0));
        for (auto& v : h.values) v = d(rng);
        Heatmap shifted = h;
        shifted.transform = box_to_crop_transform(make_box(10 + 17, 20 - 6, 58 + 17, 84 - 6),
                                                  3, 4, 12, 16, 1.0);
        const Pose a = decode_keypoints(h);
        const Pose b = decode_keypoints(shifted);
        for (int j = 0; j < 3; ++j) {
            EXPECT_NEAR(b.keypoints[j].x - a.keypoints[j].x, 17.0, 1e-6);
            EXPECT_NEAR(b.keypoints[j].y - a.keypoints[j].y, -6.0, 1e-6);
        }
    }
}

TEST(DecodeKeypoints, ScoreClampedToUnitRange) {
    Heatmap h(1, 4, 4);
    h.at(0, 2, 2) = 3.5f;
    const Pose p = decode_keypoints(h);
    EXPECT_DOUBLE_EQ(p.keypoints[0].score, 1.0);
}
