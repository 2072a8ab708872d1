#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "posekit/error.hpp"
#include "posekit/geometry.hpp"
#include "posekit/pose.hpp"
#include "posekit/skeleton.hpp"

namespace posekit {

// Per-joint response maps on a crop grid. `transform` maps grid coordinates
// to source-image pixels, so decoded keypoints land in image space directly.
struct Heatmap {
    int joints = 0;
    int height = 0;
    int width = 0;
    AffineTransform transform;
    std::vector<float> values; // [joint][y][x], row-major

    Heatmap() = default;
    Heatmap(int j, int h, int w, AffineTransform t = {})
        : joints(j), height(h), width(w), transform(t),
          values(static_cast<size_t>(j) * h * w, 0.f) {}

    float& at(int j, int y, int x) {
        return values[(static_cast<size_t>(j) * height + y) * width + x];
    }
    float at(int j, int y, int x) const {
        return values[(static_cast<size_t>(j) * height + y) * width + x];
    }
    size_t size() const { return values.size(); }
};

inline void require_valid_heatmap(const Heatmap& h) {
    require(h.joints >= 1, "heatmap needs at least one channel");
    require(h.height >= 2 && h.width >= 2, "heatmap grid must be at least 2x2");
    require(h.values.size() ==
                static_cast<size_t>(h.joints) * h.height * h.width,
            "heatmap value buffer does not match dims");
    require(h.transform.invertible(), "heatmap transform is not invertible");
}

// Transform from a crop grid of crop_w x crop_h onto the image region covered
// by `box` after (1) expanding the box, never shrinking, to aspect_w:aspect_h
// about its center and (2) scaling it by `scale` about its center. The box
// center maps to the crop center.
inline AffineTransform box_to_crop_transform(const DetectionBox& box,
                                             int aspect_w, int aspect_h,
                                             int crop_w, int crop_h,
                                             double scale) {
    require_valid_box(box);
    require(aspect_w > 0 && aspect_h > 0, "aspect ratio must be positive");
    require(crop_w > 0 && crop_h > 0, "crop size must be positive");
    require(scale > 0.0 && std::isfinite(scale), "scale must be positive");

    const double target = static_cast<double>(aspect_w) / aspect_h;
    double w = box.width();
    double h = box.height();
    if (w / h < target)
        w = h * target;
    else
        h = w / target;
    w *= scale;
    h *= scale;

    const Vec2 c = box.center();
    AffineTransform t;
    t.m[0] = w / crop_w;
    t.m[1] = 0;
    t.m[2] = c.x - 0.5 * w;
    t.m[3] = 0;
    t.m[4] = h / crop_h;
    t.m[5] = c.y - 0.5 * h;
    return t;
}

// Horizontal mirror with left/right channel swap. `shift_one_cell` then moves
// every column one cell along width (edge replicated) to compensate the
// stride-induced mirror misalignment of heatmap grids; disable it to get an
// exact involution. The transform is left untouched.
inline Heatmap flip_heatmap(const Heatmap& h, const JointFlipPairs& pairs,
                            bool shift_one_cell = true) {
    require_valid_heatmap(h);
    validate_flip_pairs(pairs, h.joints);

    std::vector<int> channel(static_cast<size_t>(h.joints));
    for (int j = 0; j < h.joints; ++j) channel[j] = j;
    for (const auto& [l, r] : pairs) std::swap(channel[l], channel[r]);

    Heatmap out(h.joints, h.height, h.width, h.transform);
    for (int j = 0; j < h.joints; ++j) {
        const int src = channel[j];
        for (int y = 0; y < h.height; ++y) {
            for (int x = 0; x < h.width; ++x) {
                int mx = shift_one_cell ? std::max(x - 1, 0) : x;
                out.at(j, y, x) = h.at(src, y, h.width - 1 - mx);
            }
        }
    }
    return out;
}

// Elementwise weighted mean; weights are normalized to sum 1 so uniform
// rescaling of the weight vector cannot change the result.
inline Heatmap fuse_heatmaps(const std::vector<Heatmap>& hs,
                             const std::vector<double>& weights) {
    require(!hs.empty(), "fuse_heatmaps: empty input");
    require(hs.size() == weights.size(),
            "fuse_heatmaps: weight count does not match heatmap count");
    double wsum = 0.0;
    for (double w : weights) {
        require(w >= 0.0 && std::isfinite(w),
                "fuse_heatmaps: weights must be nonnegative");
        wsum += w;
    }
    require(wsum > 0.0, "fuse_heatmaps: weights sum to zero");

    const Heatmap& first = hs.front();
    require_valid_heatmap(first);
    for (const Heatmap& h : hs) {
        require(h.joints == first.joints && h.height == first.height &&
                    h.width == first.width,
                "fuse_heatmaps: shape mismatch (resample first)");
        require(h.transform.almost_equal(first.transform),
                "fuse_heatmaps: transform mismatch (resample first)");
    }

    Heatmap out(first.joints, first.height, first.width, first.transform);
    std::vector<double> acc(out.size(), 0.0);
    for (size_t i = 0; i < hs.size(); ++i) {
        const double w = weights[i] / wsum;
        const auto& v = hs[i].values;
        for (size_t k = 0; k < v.size(); ++k) acc[k] += w * v[k];
    }
    for (size_t k = 0; k < acc.size(); ++k)
        out.values[k] = static_cast<float>(acc[k]);
    return out;
}

namespace detail {

// Bilinear sample with zero padding outside the grid.
inline double bilinear_sample_zero(const Heatmap& h, int j, double x,
                                   double y) {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    const double ax = x - fx;
    const double ay = y - fy;
    auto tap = [&](int yy, int xx) -> double {
        if (xx < 0 || yy < 0 || xx >= h.width || yy >= h.height) return 0.0;
        return h.at(j, yy, xx);
    };
    return (1 - ax) * (1 - ay) * tap(y0, x0) + ax * (1 - ay) * tap(y0, x0 + 1) +
           (1 - ax) * ay * tap(y0 + 1, x0) + ax * ay * tap(y0 + 1, x0 + 1);
}

} // namespace detail

// Bilinear resampling of `h` onto a new grid described by target_transform.
// Samples that fall outside the source grid read as zero.
inline Heatmap resample_heatmap(const Heatmap& h,
                                const AffineTransform& target_transform,
                                int target_h, int target_w) {
    require_valid_heatmap(h);
    require(target_h >= 2 && target_w >= 2, "target grid must be at least 2x2");
    require(target_transform.invertible(),
            "resample target transform is not invertible");

    const AffineTransform to_src = h.transform.inverse().compose(target_transform);
    Heatmap out(h.joints, target_h, target_w, target_transform);
    for (int y = 0; y < target_h; ++y) {
        for (int x = 0; x < target_w; ++x) {
            const Vec2 q = to_src.apply(x, y);
            for (int j = 0; j < h.joints; ++j)
                out.at(j, y, x) =
                    static_cast<float>(detail::bilinear_sample_zero(h, j, q.x, q.y));
        }
    }
    return out;
}

// Per-channel argmax (row-major lowest linear index wins ties), quarter-cell
// shift toward the larger neighbor on each axis (tie or missing neighbor: no
// shift), then mapped through the crop transform into image pixels. Keypoint
// score is the peak response clamped to [0,1]; instance score is the mean.
inline Pose decode_keypoints(const Heatmap& h) {
    require_valid_heatmap(h);
    for (float v : h.values)
        require(std::isfinite(v), "decode_keypoints: non-finite heatmap value");

    Pose pose;
    pose.keypoints.reserve(static_cast<size_t>(h.joints));
    double score_sum = 0.0;
    for (int j = 0; j < h.joints; ++j) {
        int best_x = 0, best_y = 0;
        float best = h.at(j, 0, 0);
        for (int y = 0; y < h.height; ++y) {
            for (int x = 0; x < h.width; ++x) {
                const float v = h.at(j, y, x);
                if (v > best) {
                    best = v;
                    best_x = x;
                    best_y = y;
                }
            }
        }
        double gx = best_x;
        double gy = best_y;
        if (best_x > 0 && best_x + 1 < h.width) {
            const float l = h.at(j, best_y, best_x - 1);
            const float r = h.at(j, best_y, best_x + 1);
            if (r > l)
                gx += 0.25;
            else if (l > r)
                gx -= 0.25;
        }
        if (best_y > 0 && best_y + 1 < h.height) {
            const float up = h.at(j, best_y - 1, best_x);
            const float dn = h.at(j, best_y + 1, best_x);
            if (dn > up)
                gy += 0.25;
            else if (up > dn)
                gy -= 0.25;
        }
        const Vec2 p = h.transform.apply(gx, gy);
        Keypoint kp;
        kp.x = p.x;
        kp.y = p.y;
        kp.score = std::clamp(static_cast<double>(best), 0.0, 1.0);
        score_sum += kp.score;
        pose.keypoints.push_back(kp);
    }
    pose.score = score_sum / h.joints;
    return pose;
}

} // namespace posekit
