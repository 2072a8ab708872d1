#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "posekit/error.hpp"
#include "posekit/image.hpp"
#include "posekit/parallel.hpp"
#include "posekit/pose.hpp"

namespace posekit {

// Point-sampled displacement between two consecutive frames. `valid` is the
// tracking confidence gate: false when the structure tensor was singular or
// the point left the image.
struct FlowVector {
    double dx = 0;
    double dy = 0;
    bool valid = false;
};

struct PyramidParams {
    int levels = 3;
    int window_radius = 10;
    int max_iterations = 30;
    double epsilon = 0.01;          // convergence step size, pixels
    double min_eigenvalue = 1e-4;   // gate on the windowed structure tensor

    void validate() const {
        require(levels >= 1, "pyramid levels must be >= 1");
        require(window_radius >= 1, "window radius must be >= 1");
        require(max_iterations >= 1, "max iterations must be >= 1");
        require(epsilon > 0.0, "epsilon must be positive");
        require(min_eigenvalue >= 0.0, "min eigenvalue must be nonnegative");
    }
};

namespace detail {

// Bilinear sample with edge clamping.
inline double sample_clamped(const GrayImage& img, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = std::min(static_cast<int>(x), img.width - 2 >= 0 ? img.width - 2 : 0);
    const int y0 = std::min(static_cast<int>(y), img.height - 2 >= 0 ? img.height - 2 : 0);
    const double ax = x - x0;
    const double ay = y - y0;
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    return (1 - ax) * (1 - ay) * img.at(y0, x0) + ax * (1 - ay) * img.at(y0, x1) +
           (1 - ax) * ay * img.at(y1, x0) + ax * ay * img.at(y1, x1);
}

} // namespace detail

// Level 0 is the input; each further level smooths with the 5-tap binomial
// kernel [1 4 6 4 1]/16 (edges replicated) and decimates by 2, flooring dims.
inline std::vector<GrayImage> gaussian_pyramid(const GrayImage& img, int levels) {
    require(levels >= 1, "pyramid levels must be >= 1");
    require_valid_image(img);
    const int min_side = 1 << (levels - 1);
    require(img.width >= min_side && img.height >= min_side,
            "image too small for requested pyramid depth");

    static constexpr std::array<double, 5> kKernel = {1.0 / 16, 4.0 / 16, 6.0 / 16,
                                                      4.0 / 16, 1.0 / 16};
    std::vector<GrayImage> pyr;
    pyr.reserve(static_cast<size_t>(levels));
    pyr.push_back(img);
    for (int lvl = 1; lvl < levels; ++lvl) {
        const GrayImage& src = pyr.back();
        GrayImage horiz(src.height, src.width);
        for (int y = 0; y < src.height; ++y) {
            for (int x = 0; x < src.width; ++x) {
                double acc = 0;
                for (int t = -2; t <= 2; ++t) {
                    const int xx = std::clamp(x + t, 0, src.width - 1);
                    acc += kKernel[t + 2] * src.at(y, xx);
                }
                horiz.at(y, x) = static_cast<float>(acc);
            }
        }
        GrayImage smooth(src.height, src.width);
        for (int y = 0; y < src.height; ++y) {
            for (int x = 0; x < src.width; ++x) {
                double acc = 0;
                for (int t = -2; t <= 2; ++t) {
                    const int yy = std::clamp(y + t, 0, src.height - 1);
                    acc += kKernel[t + 2] * horiz.at(yy, x);
                }
                smooth.at(y, x) = static_cast<float>(acc);
            }
        }
        GrayImage next(src.height / 2, src.width / 2);
        for (int y = 0; y < next.height; ++y)
            for (int x = 0; x < next.width; ++x)
                next.at(y, x) = smooth.at(2 * y, 2 * x);
        pyr.push_back(std::move(next));
    }
    return pyr;
}

namespace detail {

inline FlowVector lk_track_point(const std::vector<GrayImage>& prev_pyr,
                                 const std::vector<GrayImage>& next_pyr,
                                 Vec2 point, const PyramidParams& params) {
    const int r = params.window_radius;
    const int levels = static_cast<int>(prev_pyr.size());

    double gx = 0, gy = 0; // flow guess carried across levels
    for (int lvl = levels - 1; lvl >= 0; --lvl) {
        const GrayImage& prev = prev_pyr[lvl];
        const GrayImage& next = next_pyr[lvl];
        const double scale = 1.0 / static_cast<double>(1 << lvl);
        const double px = point.x * scale;
        const double py = point.y * scale;

        // gradients of the previous frame over the window, fixed per level;
        // taps whose central-difference stencil leaves the image are dropped
        // rather than clamp-replicated, so borders contribute no fake texture
        std::vector<double> ix, iy, pv;
        std::vector<std::pair<int, int>> taps;
        double gxx = 0, gxy = 0, gyy = 0;
        for (int wy = -r; wy <= r; ++wy) {
            for (int wx = -r; wx <= r; ++wx) {
                const double sx = px + wx;
                const double sy = py + wy;
                if (sx < 1 || sy < 1 || sx > prev.width - 2 || sy > prev.height - 2)
                    continue;
                const double gx_tap = 0.5 * (sample_clamped(prev, sx + 1, sy) -
                                             sample_clamped(prev, sx - 1, sy));
                const double gy_tap = 0.5 * (sample_clamped(prev, sx, sy + 1) -
                                             sample_clamped(prev, sx, sy - 1));
                taps.emplace_back(wx, wy);
                pv.push_back(sample_clamped(prev, sx, sy));
                ix.push_back(gx_tap);
                iy.push_back(gy_tap);
                gxx += gx_tap * gx_tap;
                gxy += gx_tap * gy_tap;
                gyy += gy_tap * gy_tap;
            }
        }

        const double tr = gxx + gyy;
        const double dt = gxx * gyy - gxy * gxy;
        const double min_eig = 0.5 * (tr - std::sqrt(std::max(tr * tr - 4 * dt, 0.0)));
        // validity is judged at full resolution; coarse levels merely skip
        // refinement when the smoothed texture leaves the solve near-singular
        if (lvl == 0 && min_eig < params.min_eigenvalue) return {0, 0, false};
        if (dt <= 0.0 || min_eig < 1e-12 || taps.size() < 9) {
            if (lvl > 0) {
                gx *= 2.0;
                gy *= 2.0;
            }
            continue;
        }

        double vx = 0, vy = 0; // refinement at this level
        for (int iter = 0; iter < params.max_iterations; ++iter) {
            const double qx = px + gx + vx;
            const double qy = py + gy + vy;
            if (qx < 0 || qy < 0 || qx > next.width - 1 || qy > next.height - 1)
                return {0, 0, false};

            double bx = 0, by = 0;
            for (size_t k = 0; k < taps.size(); ++k) {
                const auto& [wx, wy] = taps[k];
                const double diff = pv[k] - sample_clamped(next, qx + wx, qy + wy);
                bx += diff * ix[k];
                by += diff * iy[k];
            }
            const double ex = (gyy * bx - gxy * by) / dt;
            const double ey = (gxx * by - gxy * bx) / dt;
            vx += ex;
            vy += ey;
            if (std::sqrt(ex * ex + ey * ey) < params.epsilon) break;
        }

        // a refinement larger than the window cannot be trusted: the match
        // left the region the normal equations were built from
        if (std::sqrt(vx * vx + vy * vy) > r) {
            if (lvl == 0) return {0, 0, false};
            vx = vy = 0;
        }

        gx += vx;
        gy += vy;
        if (lvl > 0) {
            gx *= 2.0;
            gy *= 2.0;
        }
    }

    const GrayImage& base = next_pyr[0];
    if (point.x + gx < 0 || point.y + gy < 0 || point.x + gx > base.width - 1 ||
        point.y + gy > base.height - 1)
        return {0, 0, false};
    return {gx, gy, true};
}

} // namespace detail

// Pyramidal iterative Lucas-Kanade on prebuilt pyramids. Both pyramids must
// come from same-sized frames and the same level count.
inline std::vector<FlowVector>
lucas_kanade_at_points(const std::vector<GrayImage>& prev_pyr,
                       const std::vector<GrayImage>& next_pyr,
                       const std::vector<Vec2>& points,
                       const PyramidParams& params, int threads = 1) {
    params.validate();
    require(!prev_pyr.empty() && prev_pyr.size() == next_pyr.size(),
            "pyramid level count mismatch");
    require(prev_pyr[0].width == next_pyr[0].width &&
                prev_pyr[0].height == next_pyr[0].height,
            "frame size mismatch");
    for (const Vec2& p : points)
        require(p.x >= 0 && p.y >= 0 && p.x <= prev_pyr[0].width - 1 &&
                    p.y <= prev_pyr[0].height - 1,
                "flow point outside image bounds");

    std::vector<FlowVector> out(points.size());
    parallel_for(points.size(), threads, [&](size_t i) {
        out[i] = detail::lk_track_point(prev_pyr, next_pyr, points[i], params);
    });
    return out;
}

inline std::vector<FlowVector>
lucas_kanade_at_points(const GrayImage& prev, const GrayImage& next,
                       const std::vector<Vec2>& points,
                       const PyramidParams& params, int threads = 1) {
    require(prev.width == next.width && prev.height == next.height,
            "frame size mismatch");
    const auto prev_pyr = gaussian_pyramid(prev, params.levels);
    const auto next_pyr = gaussian_pyramid(next, params.levels);
    return lucas_kanade_at_points(prev_pyr, next_pyr, points, params, threads);
}

// Moves each joint by its flow vector. Joints with invalid flow stay in place
// and have their score multiplied by `failure_score_factor` (default 0), which
// lets per-joint gating fall back to the current-frame estimate downstream.
inline Pose propagate_pose(const Pose& pose,
                           const std::vector<FlowVector>& flow_at_joints,
                           double failure_score_factor = 0.0) {
    require(pose.keypoints.size() == flow_at_joints.size(),
            "propagate_pose: flow count does not match joint count");
    Pose out = pose;
    for (size_t j = 0; j < flow_at_joints.size(); ++j) {
        const FlowVector& f = flow_at_joints[j];
        if (f.valid) {
            out.keypoints[j].x += f.dx;
            out.keypoints[j].y += f.dy;
        } else {
            out.keypoints[j].score *= failure_score_factor;
        }
    }
    return out;
}

} // namespace posekit
