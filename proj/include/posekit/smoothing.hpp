#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "posekit/error.hpp"
#include "posekit/flow.hpp"
#include "posekit/pose.hpp"
#include "posekit/tracking.hpp"

namespace posekit {

// Forward/backward blend weights and gates. alpha weighs each propagated
// neighbor term, the current frame keeps 1 - 2*alpha; both neighbors must
// clear the confidence threshold or the current pose is returned unchanged.
struct SmoothingParams {
    double alpha = 0.25;
    double confidence_threshold = 0.3;
    bool per_joint_gating = false;

    void validate() const {
        require(alpha >= 0.0 && alpha <= 0.5, "alpha must be in [0, 0.5]");
        require(confidence_threshold >= 0.0 && confidence_threshold <= 1.0,
                "confidence threshold must be in [0, 1]");
    }
};

// Blends the flow-propagated neighbors into the current pose:
//   out = alpha * propagate(prev, flow_fwd) + alpha * propagate(next, flow_bwd)
//         + (1 - 2*alpha) * cur
// coordinate-wise. Missing or low-confidence neighbors gate the smoothing off.
// Scores, track id and frame index of `cur` are preserved; alpha = 0 is a
// strict no-op. With per-joint gating, a propagated joint whose score dropped
// to 0 (flow failure) hands its alpha back to the current term.
inline Pose temporal_smooth(const std::optional<Pose>& prev, const Pose& cur,
                            const std::optional<Pose>& next,
                            const std::vector<FlowVector>& flow_fwd,
                            const std::vector<FlowVector>& flow_bwd,
                            const SmoothingParams& params) {
    params.validate();
    if (!prev || !next) return cur;
    require(prev->joints() == cur.joints() && next->joints() == cur.joints(),
            "temporal_smooth: joint count mismatch");
    if (prev->track_id && cur.track_id)
        require(*prev->track_id == *cur.track_id,
                "temporal_smooth: poses belong to different tracks");
    if (next->track_id && cur.track_id)
        require(*next->track_id == *cur.track_id,
                "temporal_smooth: poses belong to different tracks");

    if (prev->score < params.confidence_threshold ||
        next->score < params.confidence_threshold)
        return cur;
    if (params.alpha == 0.0) return cur;

    const Pose fwd = propagate_pose(*prev, flow_fwd);
    const Pose bwd = propagate_pose(*next, flow_bwd);

    Pose out = cur;
    const double a = params.alpha;
    for (int j = 0; j < cur.joints(); ++j) {
        double wp = a, wn = a;
        if (params.per_joint_gating) {
            if (fwd.keypoints[j].score == 0.0) wp = 0.0;
            if (bwd.keypoints[j].score == 0.0) wn = 0.0;
        }
        const double wc = 1.0 - wp - wn;
        out.keypoints[j].x = wp * fwd.keypoints[j].x + wn * bwd.keypoints[j].x +
                             wc * cur.keypoints[j].x;
        out.keypoints[j].y = wp * fwd.keypoints[j].y + wn * bwd.keypoints[j].y +
                             wc * cur.keypoints[j].y;
    }
    return out;
}

// Observer for every flow vector the smoother evaluates; `frame` is the
// smoothing target and `joint` counts that frame's queried joints (forward
// queries first, then backward).
using FlowDumpSink =
    std::function<void(std::int64_t frame, std::int64_t joint, const FlowVector&)>;

struct VideoSmoothingParams {
    SmoothingParams smoothing;
    PyramidParams pyramid;
    AssociationParams association; // used only when input poses lack track ids
    int passes = 1;
    int threads = 1;
    FlowDumpSink flow_dump; // optional debug tap
};

// Loads the gray frame for an index; throws MissingFileError when absent.
using FrameLoader = std::function<GrayImage(std::int64_t)>;

namespace detail {

class PyramidCache {
  public:
    PyramidCache(FrameLoader loader, int levels)
        : loader_(std::move(loader)), levels_(levels) {}

    const std::vector<GrayImage>& get(std::int64_t frame) {
        auto it = cache_.find(frame);
        if (it != cache_.end()) return it->second;
        GrayImage img = loader_(frame);
        auto [pos, _] = cache_.emplace(frame, gaussian_pyramid(img, levels_));
        return pos->second;
    }

  private:
    FrameLoader loader_;
    int levels_;
    std::map<std::int64_t, std::vector<GrayImage>> cache_;
};

inline std::vector<Vec2> joint_points(const Pose& p) {
    std::vector<Vec2> pts;
    pts.reserve(p.keypoints.size());
    for (const auto& k : p.keypoints) pts.push_back({k.x, k.y});
    return pts;
}

} // namespace detail

// Applies temporal smoothing to every (track, frame) cell that has both
// neighbors. Track identities come from the poses' track ids when all are
// present, otherwise from an internal IoU association over pose bounding
// boxes; the output poses keep their original ids either way. Instance counts
// per frame, scores and ids are preserved exactly; the first and last frame
// of every track pass through unchanged.
inline std::vector<std::vector<Pose>>
smooth_video(const std::vector<std::vector<Pose>>& pose_frames,
             const FrameLoader& load_frame, const VideoSmoothingParams& params) {
    params.smoothing.validate();
    params.pyramid.validate();
    require(params.passes >= 1, "passes must be >= 1");

    const std::int64_t nframes = static_cast<std::int64_t>(pose_frames.size());
    if (nframes == 0) return {};

    int joints = -1;
    for (const auto& frame : pose_frames)
        for (const auto& p : frame) {
            if (joints < 0) joints = p.joints();
            require(p.joints() == joints,
                    "smooth_video: poses disagree on joint count");
        }

    bool have_ids = true;
    for (const auto& frame : pose_frames)
        for (const auto& p : frame)
            if (!p.track_id) have_ids = false;

    // internal_ids[k][i]: association identity of pose i in frame k
    std::vector<std::vector<std::int64_t>> internal_ids(pose_frames.size());
    if (have_ids) {
        for (size_t k = 0; k < pose_frames.size(); ++k) {
            std::set<std::int64_t> seen;
            for (const auto& p : pose_frames[k]) {
                require(seen.insert(*p.track_id).second,
                        "smooth_video: duplicate track id within frame " +
                            std::to_string(k));
                internal_ids[k].push_back(*p.track_id);
            }
        }
    } else {
        std::vector<std::vector<TrackedInstance>> frames(pose_frames.size());
        for (size_t k = 0; k < pose_frames.size(); ++k)
            for (const auto& p : pose_frames[k])
                frames[k].push_back(
                    TrackedInstance{pose_bounding_box(p, p.score), p, std::nullopt});
        AssociationParams assoc = params.association;
        assoc.iou_weight = 1.0; // no features to compare
        internal_ids = build_tracks(frames, assoc).ids;
    }

    detail::PyramidCache pyramids(load_frame, params.pyramid.levels);
    auto clamp_points = [](std::vector<Vec2> pts, const GrayImage& img) {
        for (auto& p : pts) {
            p.x = std::clamp(p.x, 0.0, static_cast<double>(img.width - 1));
            p.y = std::clamp(p.y, 0.0, static_cast<double>(img.height - 1));
        }
        return pts;
    };

    std::vector<std::vector<Pose>> cur = pose_frames;
    for (int pass = 0; pass < params.passes; ++pass) {
        std::vector<std::vector<Pose>> out = cur;
        for (std::int64_t k = 1; k + 1 < nframes; ++k) {
            // id -> pose index in the neighbor frames
            std::map<std::int64_t, size_t> prev_of, next_of;
            for (size_t i = 0; i < cur[k - 1].size(); ++i)
                prev_of.emplace(internal_ids[k - 1][i], i);
            for (size_t i = 0; i < cur[k + 1].size(); ++i)
                next_of.emplace(internal_ids[k + 1][i], i);

            struct Cell {
                size_t cur_idx, prev_idx, next_idx;
            };
            std::vector<Cell> cells;
            for (size_t i = 0; i < cur[k].size(); ++i) {
                const auto pit = prev_of.find(internal_ids[k][i]);
                const auto nit = next_of.find(internal_ids[k][i]);
                if (pit == prev_of.end() || nit == next_of.end()) continue;
                const Pose& prev = cur[k - 1][pit->second];
                const Pose& next = cur[k + 1][nit->second];
                if (prev.score < params.smoothing.confidence_threshold ||
                    next.score < params.smoothing.confidence_threshold)
                    continue;
                cells.push_back({i, pit->second, nit->second});
            }
            if (cells.empty() || params.smoothing.alpha == 0.0) continue;

            // batch the flow queries for both frame pairs
            std::vector<Vec2> fwd_pts, bwd_pts;
            for (const Cell& c : cells) {
                auto fp = detail::joint_points(cur[k - 1][c.prev_idx]);
                auto np = detail::joint_points(cur[k + 1][c.next_idx]);
                fwd_pts.insert(fwd_pts.end(), fp.begin(), fp.end());
                bwd_pts.insert(bwd_pts.end(), np.begin(), np.end());
            }
            const auto& pyr_prev = pyramids.get(k - 1);
            const auto& pyr_cur = pyramids.get(k);
            const auto& pyr_next = pyramids.get(k + 1);
            const auto fwd_flow = lucas_kanade_at_points(
                pyr_prev, pyr_cur, clamp_points(fwd_pts, pyr_prev[0]),
                params.pyramid, params.threads);
            const auto bwd_flow = lucas_kanade_at_points(
                pyr_next, pyr_cur, clamp_points(bwd_pts, pyr_next[0]),
                params.pyramid, params.threads);
            if (params.flow_dump && pass == 0) {
                std::int64_t joint = 0;
                for (const auto& f : fwd_flow) params.flow_dump(k, joint++, f);
                for (const auto& f : bwd_flow) params.flow_dump(k, joint++, f);
            }

            size_t offset = 0;
            for (const Cell& c : cells) {
                const Pose& prev = cur[k - 1][c.prev_idx];
                const Pose& next = cur[k + 1][c.next_idx];
                const size_t nj = prev.keypoints.size();
                std::vector<FlowVector> ff(fwd_flow.begin() + offset,
                                           fwd_flow.begin() + offset + nj);
                std::vector<FlowVector> bf(bwd_flow.begin() + offset,
                                           bwd_flow.begin() + offset + nj);
                Pose prev_in = prev, next_in = next, cur_in = cur[k][c.cur_idx];
                // ids were resolved by the association above
                prev_in.track_id = next_in.track_id = cur_in.track_id =
                    std::nullopt;
                Pose smoothed = temporal_smooth(prev_in, cur_in, next_in, ff, bf,
                                                params.smoothing);
                smoothed.track_id = cur[k][c.cur_idx].track_id;
                out[k][c.cur_idx] = smoothed;
                offset += nj;
            }
        }
        cur = std::move(out);
    }
    return cur;
}

} // namespace posekit
