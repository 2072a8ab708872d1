#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "posekit/flow.hpp"
#include "test_textures.hpp"

using namespace posekit;

namespace {

// Smooth band-limited texture so bilinear sampling stays faithful.
struct SinField {
    struct Wave {
        double kx, ky, phase, amp;
    };
    std::vector<Wave> waves;

    static SinField random(std::mt19937& rng, int count = 6) {
        SinField f;
        std::uniform_real_distribution<double> freq(2.0 * 3.14159265 / 32.0,
                                                    2.0 * 3.14159265 / 8.0);
        std::uniform_real_distribution<double> phase(0.0, 6.28);
        for (int i = 0; i < count; ++i)
            f.waves.push_back({freq(rng), freq(rng), phase(rng), 0.5 / count});
        return f;
    }

    double operator()(double x, double y) const {
        double v = 0.5;
        for (const auto& w : waves)
            v += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
        return std::clamp(v, 0.0, 1.0);
    }

    GrayImage render(int h, int w, double shift_x = 0, double shift_y = 0) const {
        GrayImage img(h, w);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                img.at(y, x) = static_cast<float>((*this)(x - shift_x, y - shift_y));
        return img;
    }
};

// Direct 5x5 binomial convolution with clamped borders, then 2x decimation.
GrayImage pyramid_level_oracle(const GrayImage& src) {
    static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    GrayImage smooth(src.height, src.width);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc = 0;
            for (int dy = -2; dy <= 2; ++dy) {
                for (int dx = -2; dx <= 2; ++dx) {
                    const int yy = std::clamp(y + dy, 0, src.height - 1);
                    const int xx = std::clamp(x + dx, 0, src.width - 1);
                    acc += k[dy + 2] * k[dx + 2] * src.at(yy, xx);
                }
            }
            smooth.at(y, x) = static_cast<float>(acc);
        }
    }
    GrayImage out(src.height / 2, src.width / 2);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) out.at(y, x) = smooth.at(2 * y, 2 * x);
    return out;
}

std::vector<Vec2> interior_grid(int w, int h, int margin, int step) {
    std::vector<Vec2> pts;
    for (int y = margin; y < h - margin; y += step)
        for (int x = margin; x < w - margin; x += step)
            pts.push_back({static_cast<double>(x), static_cast<double>(y)});
    return pts;
}

} // namespace

TEST(GaussianPyramid, SingleLevelIsInput) {
    std::mt19937 rng(3);
    const GrayImage img = SinField::random(rng).render(16, 20);
    const auto pyr = gaussian_pyramid(img, 1);
    ASSERT_EQ(pyr.size(), 1u);
    for (size_t i = 0; i < img.values.size(); ++i)
        EXPECT_FLOAT_EQ(pyr[0].values[i], img.values[i]);
}

TEST(GaussianPyramid, ConstantStaysConstant) {
    GrayImage img(16, 16, 0.37f);
    const auto pyr = gaussian_pyramid(img, 3);
    for (const auto& level : pyr)
        for (float v : level.values) EXPECT_NEAR(v, 0.37f, 1e-9);
}

TEST(GaussianPyramid, RampMatchesDirectConvolutionOracle) {
    GrayImage img(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) img.at(y, x) = static_cast<float>(x) / 15.f;

    const auto pyr = gaussian_pyramid(img, 3);
    ASSERT_EQ(pyr.size(), 3u);
    EXPECT_EQ(pyr[0].width, 16);
    EXPECT_EQ(pyr[1].width, 8);
    EXPECT_EQ(pyr[2].width, 4);

    const GrayImage l1 = pyramid_level_oracle(img);
    const GrayImage l2 = pyramid_level_oracle(l1);
    for (size_t i = 0; i < l1.values.size(); ++i)
        EXPECT_NEAR(pyr[1].values[i], l1.values[i], 1e-6);
    for (size_t i = 0; i < l2.values.size(); ++i)
        EXPECT_NEAR(pyr[2].values[i], l2.values[i], 1e-6);
}

TEST(GaussianPyramid, DimsHalveAndValuesStayInRange) {
    std::mt19937 rng(5);
    const GrayImage img = SinField::random(rng).render(37, 53);
    const auto pyr = gaussian_pyramid(img, 3);
    EXPECT_EQ(pyr[1].height, 18);
    EXPECT_EQ(pyr[1].width, 26);
    EXPECT_EQ(pyr[2].height, 9);
    EXPECT_EQ(pyr[2].width, 13);
    for (const auto& level : pyr)
        for (float v : level.values) {
            EXPECT_GE(v, 0.f);
            EXPECT_LE(v, 1.f);
        }
}

TEST(GaussianPyramid, TooSmallImageRejected) {
    GrayImage img(4, 4, 0.5f);
    EXPECT_THROW(gaussian_pyramid(img, 4), InvalidInputError);
}

TEST(LucasKanade, ZeroMotionOnIdenticalFrames) {
    std::mt19937 rng(7);
    const GrayImage img = testutil::noise_texture(96, 96, rng);
    PyramidParams params;
    const auto flows = lucas_kanade_at_points(img, img, interior_grid(96, 96, 16, 12),
                                              params);
    for (const auto& f : flows) {
        ASSERT_TRUE(f.valid);
        EXPECT_NEAR(f.dx, 0.0, params.epsilon);
        EXPECT_NEAR(f.dy, 0.0, params.epsilon);
    }
}

TEST(LucasKanade, RecoversIntegerTranslation) {
    std::mt19937 rng(11);
    const auto [prev, next] = testutil::shifted_pair(128, 128, 3, -2, rng);
    PyramidParams params;
    const auto flows = lucas_kanade_at_points(prev, next,
                                              interior_grid(128, 128, 20, 16), params);
    for (const auto& f : flows) {
        ASSERT_TRUE(f.valid);
        EXPECT_NEAR(f.dx, 3.0, 0.1);
        EXPECT_NEAR(f.dy, -2.0, 0.1);
    }
}

TEST(LucasKanade, TexturelessRegionIsInvalid) {
    GrayImage flat(64, 64, 0.5f);
    PyramidParams params;
    const auto flows = lucas_kanade_at_points(flat, flat, {{32.0, 32.0}}, params);
    ASSERT_EQ(flows.size(), 1u);
    EXPECT_FALSE(flows[0].valid);
}

TEST(LucasKanade, ApproximatelyAntisymmetricOnTranslation) {
    std::mt19937 rng(13);
    const auto [prev, next] = testutil::shifted_pair(128, 128, 4, 1, rng);
    PyramidParams params;
    const auto pts = interior_grid(128, 128, 24, 20);
    const auto fwd = lucas_kanade_at_points(prev, next, pts, params);
    const auto bwd = lucas_kanade_at_points(next, prev, pts, params);
    for (size_t i = 0; i < pts.size(); ++i) {
        ASSERT_TRUE(fwd[i].valid);
        ASSERT_TRUE(bwd[i].valid);
        EXPECT_NEAR(fwd[i].dx + bwd[i].dx, 0.0, 0.2);
        EXPECT_NEAR(fwd[i].dy + bwd[i].dy, 0.0, 0.2);
    }
}

TEST(LucasKanade, SizeMismatchRejected) {
    GrayImage a(32, 32, 0.5f), b(32, 48, 0.5f);
    EXPECT_THROW(lucas_kanade_at_points(a, b, {{5.0, 5.0}}, PyramidParams{}),
                 InvalidInputError);
}

TEST(PropagatePose, ZeroFlowIsIdentity) {
    Pose p;
    p.keypoints = {{3, 4, 0.8}, {10, 12, 0.9}};
    const auto out = propagate_pose(p, {{0, 0, true}, {0, 0, true}});
    for (size_t j = 0; j < p.keypoints.size(); ++j) {
        EXPECT_DOUBLE_EQ(out.keypoints[j].x, p.keypoints[j].x);
        EXPECT_DOUBLE_EQ(out.keypoints[j].y, p.keypoints[j].y);
        EXPECT_DOUBLE_EQ(out.keypoints[j].score, p.keypoints[j].score);
    }
}

TEST(PropagatePose, UniformFlowShiftsEveryJoint) {
    Pose p;
    p.keypoints = {{3, 4, 0.8}, {10, 12, 0.9}, {0, 0, 0.5}};
    const std::vector<FlowVector> flow(3, {5, 5, true});
    const auto out = propagate_pose(p, flow);
    for (size_t j = 0; j < p.keypoints.size(); ++j) {
        EXPECT_DOUBLE_EQ(out.keypoints[j].x, p.keypoints[j].x + 5);
        EXPECT_DOUBLE_EQ(out.keypoints[j].y, p.keypoints[j].y + 5);
    }
}

TEST(PropagatePose, InvalidFlowKeepsJointAndZeroesScore) {
    Pose p;
    p.keypoints = {{3, 4, 0.8}, {10, 12, 0.9}};
    const auto out = propagate_pose(p, {{2, 1, true}, {0, 0, false}});
    EXPECT_DOUBLE_EQ(out.keypoints[0].x, 5);
    EXPECT_DOUBLE_EQ(out.keypoints[0].y, 5);
    EXPECT_DOUBLE_EQ(out.keypoints[0].score, 0.8);
    EXPECT_DOUBLE_EQ(out.keypoints[1].x, 10);
    EXPECT_DOUBLE_EQ(out.keypoints[1].y, 12);
    EXPECT_DOUBLE_EQ(out.keypoints[1].score, 0.0);
}

TEST(PropagatePose, ForwardThenInverseFlowRoundTrips) {
    Pose p;
    p.keypoints = {{3, 4, 0.8}, {10, 12, 0.9}};
    const std::vector<FlowVector> fwd = {{1.5, -2.25, true}, {0.25, 3.0, true}};
    std::vector<FlowVector> bwd = fwd;
    for (auto& f : bwd) {
        f.dx = -f.dx;
        f.dy = -f.dy;
    }
    const auto out = propagate_pose(propagate_pose(p, fwd), bwd);
    for (size_t j = 0; j < p.keypoints.size(); ++j) {
        EXPECT_NEAR(out.keypoints[j].x, p.keypoints[j].x, 1e-9);
        EXPECT_NEAR(out.keypoints[j].y, p.keypoints[j].y, 1e-9);
    }
}

TEST(PropagatePose, LengthMismatchRejected) {
    Pose p;
    p.keypoints = {{0, 0, 1}};
    EXPECT_THROW(propagate_pose(p, {}), InvalidInputError);
}
