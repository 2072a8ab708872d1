#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "posekit/geometry.hpp"
#include "posekit/image.hpp"
#include "posekit/pose.hpp"
#include "posekit/skeleton.hpp"

namespace posekit {

namespace detail {

inline const std::array<std::array<std::uint8_t, 3>, 8>& overlay_palette() {
    static const std::array<std::array<std::uint8_t, 3>, 8> palette = {{
        {230, 60, 60},
        {60, 200, 60},
        {70, 110, 245},
        {235, 200, 40},
        {200, 70, 220},
        {50, 210, 210},
        {245, 140, 40},
        {160, 230, 90},
    }};
    return palette;
}

inline std::array<std::uint8_t, 3> color_for_id(std::int64_t id) {
    const auto& palette = overlay_palette();
    const auto idx = static_cast<size_t>(((id % 8) + 8) % 8);
    return {palette[idx][0], palette[idx][1], palette[idx][2]};
}

inline void put_px(RgbImage& img, int x, int y,
                   const std::array<std::uint8_t, 3>& c) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    std::uint8_t* p = img.px(y, x);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
}

inline void draw_line(RgbImage& img, int x0, int y0, int x1, int y1,
                      const std::array<std::uint8_t, 3>& c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        put_px(img, x0, y0, c);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

inline void draw_rect(RgbImage& img, int x0, int y0, int x1, int y1,
                      const std::array<std::uint8_t, 3>& c) {
    draw_line(img, x0, y0, x1, y0, c);
    draw_line(img, x1, y0, x1, y1, c);
    draw_line(img, x1, y1, x0, y1, c);
    draw_line(img, x0, y1, x0, y0, c);
}

} // namespace detail

// Draws skeleton edges, keypoint dots and boxes onto a copy of the frame.
// Colors are keyed by track id, so repeated calls are byte-identical.
inline RgbImage render_overlay(const GrayImage& frame,
                               const std::vector<Pose>& poses,
                               const std::vector<DetectionBox>& boxes,
                               const SkeletonDef& skeleton) {
    RgbImage img = to_rgb(frame);

    for (size_t i = 0; i < boxes.size(); ++i) {
        const auto c = detail::color_for_id(static_cast<std::int64_t>(i));
        detail::draw_rect(img, static_cast<int>(std::lround(boxes[i].x0)),
                          static_cast<int>(std::lround(boxes[i].y0)),
                          static_cast<int>(std::lround(boxes[i].x1)),
                          static_cast<int>(std::lround(boxes[i].y1)), c);
    }

    for (size_t i = 0; i < poses.size(); ++i) {
        const Pose& p = poses[i];
        const auto c = detail::color_for_id(
            p.track_id ? *p.track_id : static_cast<std::int64_t>(i));
        for (const auto& [a, b] : skeleton.edges) {
            if (a >= p.joints() || b >= p.joints()) continue;
            detail::draw_line(img, static_cast<int>(std::lround(p.keypoints[a].x)),
                              static_cast<int>(std::lround(p.keypoints[a].y)),
                              static_cast<int>(std::lround(p.keypoints[b].x)),
                              static_cast<int>(std::lround(p.keypoints[b].y)), c);
        }
        for (const auto& k : p.keypoints) {
            const int x = static_cast<int>(std::lround(k.x));
            const int y = static_cast<int>(std::lround(k.y));
            detail::put_px(img, x, y, {255, 255, 255});
            detail::put_px(img, x + 1, y, c);
            detail::put_px(img, x - 1, y, c);
            detail::put_px(img, x, y + 1, c);
            detail::put_px(img, x, y - 1, c);
        }
    }
    return img;
}

} // namespace posekit
