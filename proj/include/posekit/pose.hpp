#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "posekit/error.hpp"
#include "posekit/geometry.hpp"

namespace posekit {

struct Keypoint {
    double x = 0;
    double y = 0;
    double score = 0; // confidence in [0, 1]
};

struct Pose {
    std::vector<Keypoint> keypoints;
    double score = 0; // instance confidence in [0, 1]
    std::optional<std::int64_t> track_id;
    std::optional<std::int64_t> frame;

    int joints() const { return static_cast<int>(keypoints.size()); }
};

// Tight keypoint bounding box over all joints, clamped to a minimum area of
// 1 px^2. Used as the OKS normalization area (no segmentation masks here).
inline double pose_area(const Pose& p) {
    if (p.keypoints.empty()) return 1.0;
    double x0 = p.keypoints[0].x, x1 = x0, y0 = p.keypoints[0].y, y1 = y0;
    for (const auto& k : p.keypoints) {
        x0 = std::min(x0, k.x);
        x1 = std::max(x1, k.x);
        y0 = std::min(y0, k.y);
        y1 = std::max(y1, k.y);
    }
    return std::max(1.0, (x1 - x0) * (y1 - y0));
}

inline DetectionBox pose_bounding_box(const Pose& p, double score = 0.0) {
    require(!p.keypoints.empty(), "pose has no keypoints");
    double x0 = p.keypoints[0].x, x1 = x0, y0 = p.keypoints[0].y, y1 = y0;
    for (const auto& k : p.keypoints) {
        x0 = std::min(x0, k.x);
        x1 = std::max(x1, k.x);
        y0 = std::min(y0, k.y);
        y1 = std::max(y1, k.y);
    }
    DetectionBox b;
    // degenerate (single-point) poses still need a usable box
    if (x1 - x0 < 1.0) x1 = x0 + 1.0;
    if (y1 - y0 < 1.0) y1 = y0 + 1.0;
    b.x0 = x0;
    b.y0 = y0;
    b.x1 = x1;
    b.y1 = y1;
    b.score = score;
    return b;
}

} // namespace posekit
