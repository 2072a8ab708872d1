#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "posekit/error.hpp"

namespace posekit {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// 2x3 affine map between pixel coordinate frames:
//   (x, y) -> (m[0]*x + m[1]*y + m[2], m[3]*x + m[4]*y + m[5])
struct AffineTransform {
    std::array<double, 6> m{1, 0, 0, 0, 1, 0};

    static AffineTransform identity() { return {}; }

    double det() const { return m[0] * m[4] - m[1] * m[3]; }

    bool invertible() const {
        const double d = det();
        return std::isfinite(d) && std::abs(d) > 1e-12;
    }

    Vec2 apply(double x, double y) const {
        return {m[0] * x + m[1] * y + m[2], m[3] * x + m[4] * y + m[5]};
    }
    Vec2 apply(const Vec2& p) const { return apply(p.x, p.y); }

    AffineTransform inverse() const {
        require(invertible(), "affine transform is not invertible");
        const double d = det();
        AffineTransform r;
        r.m[0] = m[4] / d;
        r.m[1] = -m[1] / d;
        r.m[3] = -m[3] / d;
        r.m[4] = m[0] / d;
        r.m[2] = -(r.m[0] * m[2] + r.m[1] * m[5]);
        r.m[5] = -(r.m[3] * m[2] + r.m[4] * m[5]);
        return r;
    }

    // this ∘ other: apply `other` first, then this.
    AffineTransform compose(const AffineTransform& o) const {
        AffineTransform r;
        r.m[0] = m[0] * o.m[0] + m[1] * o.m[3];
        r.m[1] = m[0] * o.m[1] + m[1] * o.m[4];
        r.m[2] = m[0] * o.m[2] + m[1] * o.m[5] + m[2];
        r.m[3] = m[3] * o.m[0] + m[4] * o.m[3];
        r.m[4] = m[3] * o.m[1] + m[4] * o.m[4];
        r.m[5] = m[3] * o.m[2] + m[4] * o.m[5] + m[5];
        return r;
    }

    bool almost_equal(const AffineTransform& o, double tol = 1e-9) const {
        for (int i = 0; i < 6; ++i)
            if (std::abs(m[i] - o.m[i]) > tol) return false;
        return true;
    }
};

// Scored axis-aligned detection box. `proposal_id` groups boxes emitted by
// the same proposal (set NMS never suppresses within a group), `model_id`
// tags the producing model for ensemble fusion, `feature` is an appearance
// embedding used by track association.
struct DetectionBox {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double score = 0;
    std::optional<std::int64_t> proposal_id;
    std::optional<std::int64_t> model_id;
    std::optional<std::vector<float>> feature;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    Vec2 center() const { return {(x0 + x1) * 0.5, (y0 + y1) * 0.5}; }
};

inline bool box_valid(const DetectionBox& b) {
    return std::isfinite(b.x0) && std::isfinite(b.y0) && std::isfinite(b.x1) &&
           std::isfinite(b.y1) && b.x1 > b.x0 && b.y1 > b.y0;
}

inline void require_valid_box(const DetectionBox& b) {
    require(box_valid(b), "degenerate detection box");
}

// Intersection over union in [0, 1].
inline double iou(const DetectionBox& a, const DetectionBox& b) {
    const double ix0 = std::max(a.x0, b.x0);
    const double iy0 = std::max(a.y0, b.y0);
    const double ix1 = std::min(a.x1, b.x1);
    const double iy1 = std::min(a.y1, b.y1);
    const double iw = ix1 - ix0;
    const double ih = iy1 - iy0;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

} // namespace posekit
