#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "posekit/error.hpp"
#include "posekit/geometry.hpp"
#include "posekit/heatmap.hpp"
#include "posekit/image.hpp"
#include "posekit/io/jsonl.hpp"
#include "posekit/pose.hpp"
#include "posekit/skeleton.hpp"

namespace posekit {

// A textured rectangle person with linear plus sinusoidal motion:
//   x(k) = x0 + vx*k + amp_x * sin(2*pi*k / period)
struct SynthPerson {
    int id = 0;
    double x0 = 0, y0 = 0; // body box top-left at frame 0
    double w = 56, h = 120;
    double vx = 0, vy = 0;           // px per frame
    double amp_x = 0, amp_y = 0;     // sinusoidal amplitude
    double period = 30;              // frames per cycle
};

struct SynthSpec {
    int width = 256;
    int height = 256;
    int frames = 60;
    std::uint64_t seed = 0;
    int feature_dim = 8;
    std::vector<SynthPerson> persons;
};

struct SynthResult {
    std::vector<GrayImage> frames;
    std::vector<std::vector<PoseRecord>> poses;          // ground truth, per frame
    std::vector<std::vector<DetectionRecord>> detections; // ground truth boxes
    std::map<int, std::vector<float>> features;           // person id -> embedding
};

namespace detail {

// Joint layout inside the unit body box, matching default_skeleton_14().
inline const std::vector<Vec2>& body_plan_14() {
    static const std::vector<Vec2> plan = {
        {0.50, 0.08}, {0.50, 0.20}, {0.35, 0.25}, {0.65, 0.25}, {0.30, 0.40},
        {0.70, 0.40}, {0.28, 0.55}, {0.72, 0.55}, {0.40, 0.55}, {0.60, 0.55},
        {0.40, 0.75}, {0.60, 0.75}, {0.40, 0.95}, {0.60, 0.95}};
    return plan;
}

inline Vec2 person_position(const SynthPerson& p, int frame) {
    double x = p.x0 + p.vx * frame;
    double y = p.y0 + p.vy * frame;
    if (p.period > 0) {
        const double phase = 2.0 * 3.14159265358979323846 * frame / p.period;
        x += p.amp_x * std::sin(phase);
        y += p.amp_y * std::sin(phase);
    }
    return {x, y};
}

// Smooth seeded noise patch in [0.25, 1]; smoothing keeps LK well conditioned.
inline GrayImage make_texture(int h, int w, std::mt19937& rng) {
    GrayImage tex(h, w);
    std::uniform_real_distribution<float> dist(0.f, 1.f);
    for (auto& v : tex.values) v = dist(rng);
    GrayImage sm(h, w);
    for (int pass = 0; pass < 2; ++pass) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = 0;
                int n = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int yy = std::clamp(y + dy, 0, h - 1);
                        const int xx = std::clamp(x + dx, 0, w - 1);
                        acc += tex.at(yy, xx);
                        ++n;
                    }
                }
                sm.at(y, x) = static_cast<float>(acc / n);
            }
        }
        std::swap(tex, sm);
    }
    float lo = 1.f, hi = 0.f;
    for (float v : tex.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const float span = std::max(hi - lo, 1e-6f);
    for (auto& v : tex.values) v = 0.25f + 0.75f * (v - lo) / span;
    return tex;
}

inline double sample_patch(const GrayImage& patch, double x, double y) {
    if (x < 0 || y < 0 || x > patch.width - 1 || y > patch.height - 1) return -1;
    const int x0 = std::min(static_cast<int>(x), patch.width - 2 >= 0 ? patch.width - 2 : 0);
    const int y0 = std::min(static_cast<int>(y), patch.height - 2 >= 0 ? patch.height - 2 : 0);
    const double ax = x - x0;
    const double ay = y - y0;
    const int x1 = std::min(x0 + 1, patch.width - 1);
    const int y1 = std::min(y0 + 1, patch.height - 1);
    return (1 - ax) * (1 - ay) * patch.at(y0, x0) + ax * (1 - ay) * patch.at(y0, x1) +
           (1 - ax) * ay * patch.at(y1, x0) + ax * ay * patch.at(y1, x1);
}

} // namespace detail

// Deterministic synthetic video: textured persons on a faint background, with
// exact ground-truth poses, boxes and per-person constant appearance features.
inline SynthResult synth_video(const SynthSpec& spec) {
    require(spec.width >= 16 && spec.height >= 16, "synth: image too small");
    require(spec.frames >= 1, "synth: need at least one frame");
    require(spec.feature_dim >= 1, "synth: feature dim must be >= 1");
    std::set<int> ids;
    for (const auto& p : spec.persons) {
        require(p.w >= 8 && p.h >= 8, "synth: person box too small");
        require(p.period > 0 || (p.amp_x == 0 && p.amp_y == 0),
                "synth: sinusoidal motion needs a positive period");
        require(ids.insert(p.id).second, "synth: duplicate person id");
    }

    std::mt19937 rng(static_cast<std::uint32_t>(spec.seed));

    // static background with mild texture
    GrayImage background(spec.height, spec.width);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            background.at(y, x) = static_cast<float>(
                0.08 + 0.04 * std::sin(x * 0.21) * std::cos(y * 0.17));

    std::vector<GrayImage> textures;
    SynthResult out;
    for (const auto& p : spec.persons) {
        textures.push_back(detail::make_texture(static_cast<int>(std::lround(p.h)),
                                                static_cast<int>(std::lround(p.w)),
                                                rng));
        // near-orthogonal constant embeddings: one-hot with small jitter
        std::vector<float> f(static_cast<size_t>(spec.feature_dim), 0.f);
        f[static_cast<size_t>(out.features.size()) % spec.feature_dim] = 1.f;
        std::uniform_real_distribution<float> jitter(-0.05f, 0.05f);
        for (auto& v : f) v += jitter(rng);
        out.features[p.id] = f;
    }

    const auto& plan = detail::body_plan_14();
    for (int k = 0; k < spec.frames; ++k) {
        GrayImage frame = background;
        std::vector<PoseRecord> frame_poses;
        std::vector<DetectionRecord> frame_dets;

        for (size_t pi = 0; pi < spec.persons.size(); ++pi) {
            const SynthPerson& person = spec.persons[pi];
            const Vec2 pos = detail::person_position(person, k);

            const int px0 = std::max(0, static_cast<int>(std::floor(pos.x)));
            const int py0 = std::max(0, static_cast<int>(std::floor(pos.y)));
            const int px1 = std::min(spec.width,
                                     static_cast<int>(std::ceil(pos.x + person.w)));
            const int py1 = std::min(spec.height,
                                     static_cast<int>(std::ceil(pos.y + person.h)));
            for (int y = py0; y < py1; ++y) {
                for (int x = px0; x < px1; ++x) {
                    const double v =
                        detail::sample_patch(textures[pi], x - pos.x, y - pos.y);
                    if (v >= 0) frame.at(y, x) = static_cast<float>(v);
                }
            }

            PoseRecord pr;
            pr.frame = k;
            pr.pose.frame = k;
            pr.pose.track_id = person.id;
            pr.pose.score = 1.0;
            for (const Vec2& rel : plan) {
                Keypoint kp;
                kp.x = pos.x + rel.x * person.w;
                kp.y = pos.y + rel.y * person.h;
                kp.score = 1.0;
                pr.pose.keypoints.push_back(kp);
            }
            frame_poses.push_back(pr);

            DetectionRecord dr;
            dr.frame = k;
            dr.box.x0 = pos.x;
            dr.box.y0 = pos.y;
            dr.box.x1 = pos.x + person.w;
            dr.box.y1 = pos.y + person.h;
            dr.box.score = 1.0;
            dr.box.feature = out.features[person.id];
            dr.track_id = person.id;
            frame_dets.push_back(dr);
        }

        out.frames.push_back(std::move(frame));
        out.poses.push_back(std::move(frame_poses));
        out.detections.push_back(std::move(frame_dets));
    }
    return out;
}

// Ideal per-joint Gaussian response for one instance: peaks of value 1 at the
// pose's joints, on a crop grid derived from the detection box.
inline Heatmap ideal_heatmap(const Pose& pose, const DetectionBox& box,
                             int grid_w = 48, int grid_h = 64,
                             double peak_sigma_cells = 2.0) {
    const AffineTransform t = box_to_crop_transform(box, 3, 4, grid_w, grid_h, 1.0);
    const AffineTransform inv = t.inverse();
    Heatmap h(pose.joints(), grid_h, grid_w, t);
    for (int j = 0; j < pose.joints(); ++j) {
        const Vec2 c = inv.apply(pose.keypoints[j].x, pose.keypoints[j].y);
        for (int y = 0; y < grid_h; ++y) {
            for (int x = 0; x < grid_w; ++x) {
                const double dx = x - c.x;
                const double dy = y - c.y;
                h.at(j, y, x) = static_cast<float>(std::exp(
                    -(dx * dx + dy * dy) / (2.0 * peak_sigma_cells * peak_sigma_cells)));
            }
        }
    }
    return h;
}

} // namespace posekit
