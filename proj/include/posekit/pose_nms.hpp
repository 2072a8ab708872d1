#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "posekit/error.hpp"
#include "posekit/pose.hpp"

namespace posekit {

// OKS falloff constants. Sigmas are dimensionless per-joint widths; joints of
// the reference pose below `visibility_threshold` are excluded from the mean.
struct OksParams {
    std::vector<double> sigmas;
    double visibility_threshold = 0.0;

    static OksParams uniform(int joints, double sigma = 0.08) {
        OksParams p;
        p.sigmas.assign(static_cast<size_t>(joints), sigma);
        return p;
    }
};

// Object keypoint similarity between `a` and `b`, normalized by `area`:
// mean over visible joints of a of exp(-d^2 / (2 * area * (2*sigma_j)^2)).
inline double oks(const Pose& a, const Pose& b, double area,
                  const OksParams& params) {
    require(a.joints() == b.joints(), "oks: joint count mismatch");
    require(static_cast<int>(params.sigmas.size()) == a.joints(),
            "oks: sigma count does not match joint count");
    require(area > 0.0 && std::isfinite(area), "oks: area must be positive");
    for (double s : params.sigmas)
        require(s > 0.0, "oks: sigmas must be positive");

    double sum = 0.0;
    int visible = 0;
    for (int j = 0; j < a.joints(); ++j) {
        if (a.keypoints[j].score < params.visibility_threshold) continue;
        const double dx = a.keypoints[j].x - b.keypoints[j].x;
        const double dy = a.keypoints[j].y - b.keypoints[j].y;
        const double k = 2.0 * params.sigmas[j];
        sum += std::exp(-(dx * dx + dy * dy) / (2.0 * area * k * k));
        ++visible;
    }
    return visible == 0 ? 0.0 : sum / visible;
}

// Drops poses below `min_instance_score`, then greedy descending-score
// suppression: a candidate is removed when its OKS against an already kept
// pose exceeds `oks_threshold`. The kept pose supplies visibility and the
// normalization area. Output is score-sorted, input order breaking ties.
inline std::vector<size_t> pose_nms_indices(const std::vector<Pose>& poses,
                                            double oks_threshold,
                                            double min_instance_score,
                                            const OksParams& params) {
    require(oks_threshold >= 0.0 && oks_threshold <= 1.0,
            "oks threshold must be in [0, 1]");
    require(min_instance_score >= 0.0 && min_instance_score <= 1.0,
            "min instance score must be in [0, 1]");

    std::vector<size_t> order;
    for (size_t i = 0; i < poses.size(); ++i)
        if (poses[i].score >= min_instance_score) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return poses[a].score > poses[b].score;
    });

    std::vector<size_t> kept;
    for (size_t idx : order) {
        const Pose& cand = poses[idx];
        bool suppressed = false;
        for (size_t k : kept) {
            if (oks(poses[k], cand, pose_area(poses[k]), params) > oks_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(idx);
    }
    return kept;
}

inline std::vector<Pose> pose_nms(const std::vector<Pose>& poses,
                                  double oks_threshold,
                                  double min_instance_score,
                                  const OksParams& params) {
    std::vector<Pose> out;
    for (size_t idx :
         pose_nms_indices(poses, oks_threshold, min_instance_score, params))
        out.push_back(poses[idx]);
    return out;
}

} // namespace posekit
