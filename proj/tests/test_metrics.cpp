#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "posekit/metrics.hpp"

using namespace posekit;

namespace {

// Threshold-enumeration AP oracle: PR point per distinct score, precision
// envelope, all-points integration.
double ap_oracle(std::vector<double> scores, std::vector<char> tp, size_t gt) {
    if (gt == 0) return scores.empty() ? 1.0 : 0.0;
    if (scores.empty()) return 0.0;

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
    std::vector<std::pair<double, double>> pr; // recall, precision
    for (double t : thresholds) {
        size_t tps = 0, kept = 0;
        for (size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= t) {
                ++kept;
                if (tp[i]) ++tps;
            }
        }
        pr.emplace_back(static_cast<double>(tps) / gt,
                        static_cast<double>(tps) / kept);
    }
    std::sort(pr.begin(), pr.end());
    // envelope
    for (size_t i = pr.size() - 1; i-- > 0;)
        pr[i].second = std::max(pr[i].second, pr[i + 1].second);
    double ap = 0, prev_r = 0;
    for (const auto& [r, p] : pr) {
        if (r > prev_r) {
            ap += (r - prev_r) * p;
            prev_r = r;
        }
    }
    return ap;
}

Pose pose_with_joints(std::initializer_list<std::pair<double, double>> pts,
                      double score, std::int64_t frame) {
    Pose p;
    p.score = score;
    p.frame = frame;
    for (const auto& [x, y] : pts) p.keypoints.push_back({x, y, 1.0});
    return p;
}

DetectionBox scored_box(double x, double y, double size, double score) {
    DetectionBox b;
    b.x0 = x;
    b.y0 = y;
    b.x1 = x + size;
    b.y1 = y + size;
    b.score = score;
    return b;
}

} // namespace

TEST(MatchGreedy, PerfectPredictionsAllTp) {
    const std::vector<double> scores = {0.9, 0.8, 0.7};
    auto sim = [](size_t p, size_t g) { return p == g ? 1.0 : 0.0; };
    const auto m = match_greedy(scores, 3, sim, 0.5);
    EXPECT_EQ(m.pred_to_gt, (std::vector<int>{0, 1, 2}));
    EXPECT_TRUE(m.unmatched_gt.empty());
}

TEST(MatchGreedy, NoPredictionsAllFn) {
    const auto m = match_greedy({}, 4, [](size_t, size_t) { return 1.0; }, 0.5);
    EXPECT_EQ(m.unmatched_gt.size(), 4u);
}

TEST(MatchGreedy, MatchesExhaustiveGreedyOracle) {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t np = 10, ng = 6;
        std::vector<double> scores(np);
        for (auto& s : scores) s = d(rng);
        std::vector<std::vector<double>> sims(np, std::vector<double>(ng));
        for (auto& row : sims)
            for (auto& v : row) v = d(rng);
        auto sim = [&](size_t p, size_t g) { return sims[p][g]; };
        const auto m = match_greedy(scores, ng, sim, 0.3);

        // oracle: walk predictions by descending score, claim best gt
        std::vector<size_t> order(np);
        std::iota(order.begin(), order.end(), size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](size_t a, size_t b) { return scores[a] > scores[b]; });
        std::vector<int> want(np, -1);
        std::vector<char> claimed(ng, 0);
        for (size_t p : order) {
            int best = -1;
            for (size_t g = 0; g < ng; ++g) {
                if (claimed[g] || sims[p][g] < 0.3) continue;
                if (best < 0 || sims[p][g] > sims[p][best]) best = static_cast<int>(g);
            }
            if (best >= 0) {
                claimed[best] = 1;
                want[p] = best;
            }
        }
        EXPECT_EQ(m.pred_to_gt, want);
    }
}

TEST(AveragePrecision, AllTpIsOne) {
    EXPECT_DOUBLE_EQ(average_precision({1, 1, 1}, 3), 1.0);
}

TEST(AveragePrecision, AllFpIsZero) {
    EXPECT_DOUBLE_EQ(average_precision({0, 0, 0}, 3), 0.0);
}

TEST(AveragePrecision, WorkedEnvelopeExample) {
    // flags [TP, FP, TP] with 2 gt: AP = 1.0 * 0.5 + (2/3) * 0.5
    EXPECT_NEAR(average_precision({1, 0, 1}, 2), 1.0 * 0.5 + (2.0 / 3.0) * 0.5, 1e-12);
}

TEST(AveragePrecision, VacuousCases) {
    EXPECT_DOUBLE_EQ(average_precision({}, 0), 1.0);
    EXPECT_DOUBLE_EQ(average_precision({0}, 0), 0.0);
    EXPECT_DOUBLE_EQ(average_precision({}, 5), 0.0);
}

TEST(AveragePrecision, MatchesThresholdEnumerationOracle) {
    std::mt19937 rng(37);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t n = 1 + rng() % 12;
        std::vector<double> scores(n);
        std::vector<char> tp(n);
        for (size_t i = 0; i < n; ++i) {
            scores[i] = d(rng);
            tp[i] = rng() % 2;
        }
        size_t tp_count = static_cast<size_t>(std::count(tp.begin(), tp.end(), 1));
        const size_t gt = tp_count + rng() % 5;
        if (gt == 0) continue;

        std::vector<size_t> order(n);
        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return scores[a] > scores[b]; });
        std::vector<char> sorted_tp(n);
        for (size_t i = 0; i < n; ++i) sorted_tp[i] = tp[order[i]];

        EXPECT_NEAR(average_precision(sorted_tp, gt), ap_oracle(scores, tp, gt), 1e-9);
    }
}

TEST(AveragePrecision, InvariantUnderMonotoneScoreTransform) {
    // AP consumes score-sorted flags, so any strictly monotone transform
    // leaves the sorted flag sequence unchanged by construction; check via the
    // oracle that the PR points agree too.
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    std::vector<double> scores(10);
    std::vector<char> tp(10);
    for (size_t i = 0; i < 10; ++i) {
        scores[i] = d(rng);
        tp[i] = rng() % 2;
    }
    std::vector<double> warped(10);
    for (size_t i = 0; i < 10; ++i) warped[i] = std::exp(3.0 * scores[i]) / 50.0;
    EXPECT_NEAR(ap_oracle(scores, tp, 6), ap_oracle(warped, tp, 6), 1e-12);
}

TEST(AveragePrecision, FlippingTpToFpNeverIncreases) {
    std::mt19937 rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t n = 2 + rng() % 10;
        std::vector<char> tp(n);
        for (auto& v : tp) v = rng() % 2;
        const size_t gt = 1 + std::count(tp.begin(), tp.end(), 1) + rng() % 3;
        const double base = average_precision(tp, gt);
        for (size_t i = 0; i < n; ++i) {
            if (!tp[i]) continue;
            auto flipped = tp;
            flipped[i] = 0;
            EXPECT_LE(average_precision(flipped, gt), base + 1e-12);
        }
    }
}

TEST(KeypointAp, PerfectPredictionsGiveOne) {
    std::vector<Pose> gt;
    for (int f = 0; f < 3; ++f) {
        gt.push_back(pose_with_joints({{10, 10}, {30, 40}, {20, 60}}, 1.0, f));
        gt.push_back(pose_with_joints({{110, 10}, {130, 40}, {120, 60}}, 1.0, f));
    }
    const auto preds = gt;
    EXPECT_DOUBLE_EQ(
        keypoint_ap(preds, gt, default_oks_thresholds(), OksParams::uniform(3)), 1.0);
}

TEST(KeypointAp, SelfEvaluationIsOneProperty) {
    std::mt19937 rng(47);
    std::uniform_real_distribution<double> d(0.0, 200.0);
    std::vector<Pose> poses;
    for (int f = 0; f < 4; ++f)
        for (int i = 0; i < 3; ++i)
            poses.push_back(pose_with_joints(
                {{d(rng), d(rng)}, {d(rng), d(rng)}, {d(rng), d(rng)}}, 1.0, f));
    EXPECT_DOUBLE_EQ(
        keypoint_ap(poses, poses, default_oks_thresholds(), OksParams::uniform(3)),
        1.0);
}

TEST(KeypointAp, MidOksSplitsThresholds) {
    // single instance whose OKS to gt is ~0.6: counted at 0.5, missed at 0.75
    const Pose gt = pose_with_joints({{0, 0}, {20, 0}}, 1.0, 0);
    Pose pred = gt;
    const double area = pose_area(gt);
    const double sigma = 0.08;
    // displacement d so that exp(-d^2/(2*area*(2s)^2)) = 0.6
    const double d = std::sqrt(-2.0 * area * 4 * sigma * sigma * std::log(0.6));
    for (auto& k : pred.keypoints) k.x += d;
    const double got = keypoint_ap({pred}, {gt}, {0.5, 0.75}, OksParams::uniform(2));
    EXPECT_NEAR(got, 0.5, 1e-12);
}

TEST(KeypointAp, EmptyBothSidesIsOne) {
    EXPECT_DOUBLE_EQ(keypoint_ap({}, {}, {0.5}, OksParams::uniform(2)), 1.0);
}

TEST(KeypointAp, SkeletonMismatchRejected) {
    const Pose a = pose_with_joints({{0, 0}, {1, 1}}, 1.0, 0);
    const Pose b = pose_with_joints({{0, 0}}, 1.0, 0);
    EXPECT_THROW(keypoint_ap({a}, {b}, {0.5}, OksParams::uniform(2)),
                 InvalidInputError);
}

TEST(WeightedAp, SingleVideoPassesThrough) {
    EXPECT_DOUBLE_EQ(weighted_ap({{"a", {0.37, 10.0}}}), 0.37);
}

TEST(WeightedAp, EqualWeightsAreArithmeticMean) {
    EXPECT_DOUBLE_EQ(weighted_ap({{"a", {0.2, 1.0}}, {"b", {0.8, 1.0}}}), 0.5);
}

TEST(WeightedAp, FrameCountWeightsWorkedExample) {
    // weights 100 and 300 over APs 0.6 and 0.8 -> (60 + 240) / 400
    EXPECT_NEAR(weighted_ap({{"a", {0.6, 100.0}}, {"b", {0.8, 300.0}}}), 0.75, 1e-12);
}

TEST(WeightedAp, InvariantUnderUniformScalingAndBounded) {
    const std::map<std::string, std::pair<double, double>> base = {
        {"a", {0.3, 2.0}}, {"b", {0.9, 5.0}}, {"c", {0.5, 1.0}}};
    std::map<std::string, std::pair<double, double>> scaled = base;
    for (auto& [k, v] : scaled) v.second *= 7.5;
    EXPECT_NEAR(weighted_ap(base), weighted_ap(scaled), 1e-12);
    EXPECT_GE(weighted_ap(base), 0.3);
    EXPECT_LE(weighted_ap(base), 0.9);
}

TEST(WeightedAp, ZeroTotalWeightRejected) {
    EXPECT_THROW(weighted_ap({{"a", {0.5, 0.0}}}), InvalidInputError);
}

TEST(MissRateCurve, PerfectDetectorReachesZeroMissAtZeroFppi) {
    std::vector<std::vector<DetectionBox>> gt(3), pred(3);
    for (int f = 0; f < 3; ++f) {
        gt[f] = {scored_box(10, 10, 20, 1.0), scored_box(50, 50, 20, 1.0)};
        pred[f] = gt[f];
    }
    const auto curve = miss_rate_curve(pred, gt, 0.5);
    ASSERT_FALSE(curve.empty());
    EXPECT_DOUBLE_EQ(curve.front().fppi, 0.0);
    EXPECT_DOUBLE_EQ(curve.front().miss_rate, 0.0);
}

TEST(MissRateCurve, EmptyDetectorGivesSingleFullMissPoint) {
    std::vector<std::vector<DetectionBox>> gt(2), pred(2);
    gt[0] = {scored_box(0, 0, 10, 1.0)};
    const auto curve = miss_rate_curve(pred, gt, 0.5);
    ASSERT_EQ(curve.size(), 1u);
    EXPECT_DOUBLE_EQ(curve[0].fppi, 0.0);
    EXPECT_DOUBLE_EQ(curve[0].miss_rate, 1.0);
}

TEST(MissRateCurve, HandEnumeratedToyCase) {
    // 3 frames, 3 gt total; predictions: scores .9 (tp), .8 (fp), .7 (tp), .6 (fp)
    std::vector<std::vector<DetectionBox>> gt(3), pred(3);
    gt[0] = {scored_box(0, 0, 10, 1.0)};
    gt[1] = {scored_box(0, 0, 10, 1.0)};
    gt[2] = {scored_box(0, 0, 10, 1.0)};
    pred[0] = {scored_box(0, 0, 10, 0.9), scored_box(50, 50, 10, 0.8)};
    pred[1] = {scored_box(0, 0, 10, 0.7)};
    pred[2] = {scored_box(60, 60, 10, 0.6)};
    const auto curve = miss_rate_curve(pred, gt, 0.5);
    // thresholds: .9 -> (0, 2/3); .8 -> (1/3, 2/3); .7 -> (1/3, 1/3); .6 -> (2/3, 1/3)
    ASSERT_EQ(curve.size(), 4u);
    EXPECT_NEAR(curve[0].fppi, 0.0, 1e-12);
    EXPECT_NEAR(curve[0].miss_rate, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(curve[1].fppi, 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(curve[1].miss_rate, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(curve[2].fppi, 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(curve[2].miss_rate, 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(curve[3].fppi, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(curve[3].miss_rate, 1.0 / 3.0, 1e-12);
}

TEST(MissRateCurve, MonotoneAlongFppi) {
    std::mt19937 rng(53);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    std::vector<std::vector<DetectionBox>> gt(5), pred(5);
    for (int f = 0; f < 5; ++f) {
        for (int i = 0; i < 3; ++i) gt[f].push_back(scored_box(i * 40.0, 0, 20, 1.0));
        for (int i = 0; i < 5; ++i)
            pred[f].push_back(scored_box(i * 35.0 + d(rng) * 10, d(rng) * 10, 20, d(rng)));
    }
    const auto curve = miss_rate_curve(pred, gt, 0.5);
    for (size_t i = 1; i < curve.size(); ++i) {
        EXPECT_GE(curve[i].fppi, curve[i - 1].fppi);
        EXPECT_LE(curve[i].miss_rate, curve[i - 1].miss_rate + 1e-12);
    }
}

TEST(MissRateCurve, NoGroundTruthRejected) {
    std::vector<std::vector<DetectionBox>> gt(2), pred(2);
    pred[0] = {scored_box(0, 0, 10, 0.5)};
    EXPECT_THROW(miss_rate_curve(pred, gt, 0.5), InvalidInputError);
}

TEST(LogAverageMissRate, ConstantCurveGivesThatPercentage) {
    EXPECT_NEAR(log_average_miss_rate({{0.0, 0.5}}), 50.0, 1e-12);
}

TEST(LogAverageMissRate, PerfectDetectorGivesZero) {
    EXPECT_NEAR(log_average_miss_rate({{0.0, 0.0}}), 0.0, 1e-12);
}

TEST(LogAverageMissRate, TwoStepCurveMatchesHandEvaluation) {
    // miss 0.8 up to fppi 0.5, then 0.2 from fppi 0.5 on
    const std::vector<MissRatePoint> curve = {{0.005, 0.8}, {0.5, 0.2}};
    // samples at 10^{-2, -1.5, ..., 2}: first 4 read 0.8, remaining 5 read 0.2
    const double want = 100.0 * (4 * 0.8 + 5 * 0.2) / 9.0;
    EXPECT_NEAR(log_average_miss_rate(curve), want, 1e-9);
}

TEST(LogAverageMissRate, CurveStartingAboveRangeReadsAsFullMiss) {
    // curve starts at fppi 10: the 6 samples below 10 read 1.0
    const std::vector<MissRatePoint> curve = {{10.0, 0.1}};
    const double want = 100.0 * (6 * 1.0 + 3 * 0.1) / 9.0;
    EXPECT_NEAR(log_average_miss_rate(curve), want, 1e-9);
}

TEST(LogAverageMissRate, EmptyCurveRejected) {
    EXPECT_THROW(log_average_miss_rate({}), InvalidInputError);
}
