#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "posekit/error.hpp"
#include "posekit/geometry.hpp"
#include "posekit/pose.hpp"
#include "posekit/pose_nms.hpp"

namespace posekit {

struct MatchResult {
    std::vector<int> pred_to_gt;        // per prediction: gt index or -1 (FP)
    std::vector<size_t> unmatched_gt;   // FN indices
};

// Greedy one-to-one matching: predictions in descending score order each
// claim the unclaimed ground-truth item of highest similarity >= threshold.
// Ties: equal scores keep input order, equal similarities take the lowest
// ground-truth index.
inline MatchResult
match_greedy(const std::vector<double>& pred_scores, size_t gt_count,
             const std::function<double(size_t, size_t)>& similarity,
             double threshold) {
    std::vector<size_t> order(pred_scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return pred_scores[a] > pred_scores[b];
    });

    MatchResult out;
    out.pred_to_gt.assign(pred_scores.size(), -1);
    std::vector<char> claimed(gt_count, 0);
    for (size_t p : order) {
        int best_gt = -1;
        double best = 0.0;
        for (size_t g = 0; g < gt_count; ++g) {
            if (claimed[g]) continue;
            const double sim = similarity(p, g);
            if (sim < threshold) continue;
            if (best_gt < 0 || sim > best) {
                best = sim;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0) {
            claimed[best_gt] = 1;
            out.pred_to_gt[p] = best_gt;
        }
    }
    for (size_t g = 0; g < gt_count; ++g)
        if (!claimed[g]) out.unmatched_gt.push_back(g);
    return out;
}

// Area under the interpolated precision-recall curve (precision envelope,
// all-points integration). Flags must be sorted by descending prediction
// score. Vacuous cases: no ground truth and no predictions is a perfect 1,
// predictions against empty ground truth score 0.
inline double average_precision(const std::vector<char>& tp_flags,
                                size_t gt_count) {
    if (gt_count == 0) return tp_flags.empty() ? 1.0 : 0.0;
    if (tp_flags.empty()) return 0.0;

    const size_t n = tp_flags.size();
    std::vector<double> precision(n), recall(n);
    size_t tp = 0;
    for (size_t i = 0; i < n; ++i) {
        if (tp_flags[i]) ++tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(gt_count);
    }
    // precision envelope from the right
    for (size_t i = n - 1; i-- > 0;)
        precision[i] = std::max(precision[i], precision[i + 1]);

    double ap = 0.0;
    double prev_recall = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (recall[i] > prev_recall) {
            ap += (recall[i] - prev_recall) * precision[i];
            prev_recall = recall[i];
        }
    }
    return ap;
}

namespace detail {

// Pools per-frame matches into score-sorted TP flags.
struct PooledFlags {
    std::vector<double> scores;
    std::vector<char> tp;

    void add(double score, bool is_tp) {
        scores.push_back(score);
        tp.push_back(is_tp ? 1 : 0);
    }
    void sort_by_score() {
        std::vector<size_t> order(scores.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return scores[a] > scores[b];
        });
        std::vector<double> s(scores.size());
        std::vector<char> t(scores.size());
        for (size_t i = 0; i < order.size(); ++i) {
            s[i] = scores[order[i]];
            t[i] = tp[order[i]];
        }
        scores = std::move(s);
        tp = std::move(t);
    }
};

} // namespace detail

// Mean over OKS thresholds of the AP obtained by greedy OKS matching within
// each frame. The ground-truth pose supplies visibility and area.
inline double keypoint_ap(const std::vector<Pose>& predictions,
                          const std::vector<Pose>& ground_truth,
                          const std::vector<double>& oks_thresholds,
                          const OksParams& params) {
    require(!oks_thresholds.empty(), "keypoint_ap: no thresholds");
    for (double t : oks_thresholds)
        require(t > 0.0 && t < 1.0, "keypoint_ap: thresholds must be in (0, 1)");
    for (const auto& p : predictions)
        for (const auto& g : ground_truth)
            require(p.joints() == g.joints(), "keypoint_ap: skeleton mismatch");

    using FrameKey = std::optional<std::int64_t>;
    std::map<FrameKey, std::pair<std::vector<size_t>, std::vector<size_t>>> frames;
    for (size_t i = 0; i < predictions.size(); ++i)
        frames[predictions[i].frame].first.push_back(i);
    for (size_t i = 0; i < ground_truth.size(); ++i)
        frames[ground_truth[i].frame].second.push_back(i);

    double ap_sum = 0.0;
    for (double threshold : oks_thresholds) {
        detail::PooledFlags pooled;
        for (const auto& [key, frame] : frames) {
            const auto& [pred_idx, gt_idx] = frame;
            std::vector<double> scores;
            scores.reserve(pred_idx.size());
            for (size_t i : pred_idx) scores.push_back(predictions[i].score);
            auto sim = [&](size_t p, size_t g) {
                const Pose& gt = ground_truth[gt_idx[g]];
                return oks(gt, predictions[pred_idx[p]], pose_area(gt), params);
            };
            const MatchResult m = match_greedy(scores, gt_idx.size(), sim, threshold);
            for (size_t p = 0; p < pred_idx.size(); ++p)
                pooled.add(scores[p], m.pred_to_gt[p] >= 0);
        }
        pooled.sort_by_score();
        ap_sum += average_precision(pooled.tp, ground_truth.size());
    }
    return ap_sum / static_cast<double>(oks_thresholds.size());
}

inline std::vector<double> default_oks_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
    return t;
}

// Weighted mean of per-video APs.
inline double
weighted_ap(const std::map<std::string, std::pair<double, double>>& per_video) {
    require(!per_video.empty(), "weighted_ap: no videos");
    double num = 0.0, den = 0.0;
    for (const auto& [name, entry] : per_video) {
        const auto& [ap, weight] = entry;
        require(weight >= 0.0 && std::isfinite(weight),
                "weighted_ap: weights must be nonnegative");
        num += weight * ap;
        den += weight;
    }
    require(den > 0.0, "weighted_ap: total weight is zero");
    return num / den;
}

struct MissRatePoint {
    double fppi = 0;
    double miss_rate = 0;
};

// Sweeps every distinct prediction score as a keep-threshold and records
// (false positives per image, miss rate), sorted by ascending FPPI. Greedy
// IoU matching per frame in descending score order; matches of the full sweep
// restrict consistently to every threshold.
inline std::vector<MissRatePoint>
miss_rate_curve(const std::vector<std::vector<DetectionBox>>& pred_frames,
                const std::vector<std::vector<DetectionBox>>& gt_frames,
                double iou_threshold) {
    require(pred_frames.size() == gt_frames.size(),
            "miss_rate_curve: frame count mismatch");
    require(!pred_frames.empty(), "miss_rate_curve: no frames");
    size_t total_gt = 0;
    for (const auto& f : gt_frames) total_gt += f.size();
    require(total_gt > 0, "miss_rate_curve: no ground truth");
    const double nframes = static_cast<double>(pred_frames.size());

    detail::PooledFlags pooled;
    for (size_t f = 0; f < pred_frames.size(); ++f) {
        const auto& preds = pred_frames[f];
        const auto& gts = gt_frames[f];
        std::vector<double> scores;
        scores.reserve(preds.size());
        for (const auto& b : preds) scores.push_back(b.score);
        auto sim = [&](size_t p, size_t g) { return iou(preds[p], gts[g]); };
        const MatchResult m = match_greedy(scores, gts.size(), sim, iou_threshold);
        for (size_t p = 0; p < preds.size(); ++p)
            pooled.add(scores[p], m.pred_to_gt[p] >= 0);
    }
    pooled.sort_by_score();

    if (pooled.scores.empty()) return {{0.0, 1.0}};

    // one point per distinct threshold; sweeping in descending score order
    // already yields ascending FPPI and non-increasing miss rate
    std::vector<MissRatePoint> curve;
    size_t tp = 0, kept = 0;
    for (size_t i = 0; i < pooled.scores.size(); ++i) {
        if (pooled.tp[i]) ++tp;
        ++kept;
        const bool last_of_threshold =
            i + 1 == pooled.scores.size() || pooled.scores[i + 1] != pooled.scores[i];
        if (!last_of_threshold) continue;
        curve.push_back(
            {static_cast<double>(kept - tp) / nframes,
             static_cast<double>(total_gt - tp) / static_cast<double>(total_gt)});
    }
    return curve;
}

// Mean miss rate over log-spaced FPPI samples, as a percentage. Each sample
// reads the curve at the largest FPPI <= sample, or 1.0 when the curve has
// not started yet.
inline double log_average_miss_rate(const std::vector<MissRatePoint>& curve,
                                    double fppi_min = 0.01,
                                    double fppi_max = 100.0, int points = 9) {
    require(!curve.empty(), "log_average_miss_rate: empty curve");
    require(points >= 2, "log_average_miss_rate: need at least 2 sample points");
    require(fppi_min > 0.0 && fppi_max > fppi_min,
            "log_average_miss_rate: bad fppi range");

    const double lmin = std::log10(fppi_min);
    const double lmax = std::log10(fppi_max);
    double sum = 0.0;
    for (int i = 0; i < points; ++i) {
        const double sample =
            std::pow(10.0, lmin + (lmax - lmin) * i / (points - 1));
        double mr = 1.0;
        for (const MissRatePoint& p : curve) {
            if (p.fppi <= sample)
                mr = p.miss_rate;
            else
                break;
        }
        sum += mr;
    }
    return 100.0 * sum / points;
}

struct VideoStats {
    double ap = 0;
    std::int64_t tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
    std::map<std::string, VideoStats> videos;
    double weighted_ap = 0;
    std::optional<double> mmr; // detection task only
};

} // namespace posekit
