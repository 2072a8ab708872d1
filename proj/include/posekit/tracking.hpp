#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "posekit/error.hpp"
#include "posekit/geometry.hpp"
#include "posekit/hungarian.hpp"
#include "posekit/pose.hpp"

namespace posekit {

// Cosine similarity between two appearance embeddings, in [-1, 1].
inline double appearance_similarity(const std::vector<float>& fa,
                                    const std::vector<float>& fb) {
    require(fa.size() == fb.size(), "feature dimension mismatch");
    require(!fa.empty(), "empty feature vector");
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < fa.size(); ++i) {
        dot += static_cast<double>(fa[i]) * fb[i];
        na += static_cast<double>(fa[i]) * fa[i];
        nb += static_cast<double>(fb[i]) * fb[i];
    }
    require(na > 0.0 && nb > 0.0, "zero feature vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// One person instance within one frame.
struct TrackedInstance {
    DetectionBox box;
    Pose pose;
    std::optional<std::vector<float>> feature;
};

struct AssociationParams {
    double sim_threshold = 0.4; // pairs below this stay unmatched
    double iou_weight = 0.3;    // blend of IoU into the affinity
};

struct Association {
    // cur_to_prev[i] = index into prev for cur instance i, or -1 (new track).
    std::vector<int> cur_to_prev;
    double total_affinity = 0;
};

inline double pair_affinity(const TrackedInstance& a, const TrackedInstance& b,
                            double iou_weight) {
    const double overlap = iou(a.box, b.box);
    if (!a.feature || !b.feature) return overlap; // iou_weight forced to 1
    const double sim = appearance_similarity(*a.feature, *b.feature);
    return (1.0 - iou_weight) * sim + iou_weight * overlap;
}

// Optimal one-to-one match between consecutive frames, maximizing the blended
// appearance/IoU affinity; matches whose affinity falls below the threshold
// are discarded afterwards.
inline Association associate_frames(const std::vector<TrackedInstance>& prev,
                                    const std::vector<TrackedInstance>& cur,
                                    const AssociationParams& params) {
    require(params.sim_threshold >= 0.0 && params.sim_threshold <= 1.0,
            "sim threshold must be in [0, 1]");
    require(params.iou_weight >= 0.0 && params.iou_weight <= 1.0,
            "iou weight must be in [0, 1]");

    Association out;
    out.cur_to_prev.assign(cur.size(), -1);
    if (prev.empty() || cur.empty()) return out;

    std::vector<std::vector<double>> affinity(
        cur.size(), std::vector<double>(prev.size(), 0.0));
    for (size_t i = 0; i < cur.size(); ++i)
        for (size_t j = 0; j < prev.size(); ++j)
            affinity[i][j] = pair_affinity(cur[i], prev[j], params.iou_weight);

    const auto match = max_affinity_assignment(affinity);
    for (size_t i = 0; i < cur.size(); ++i) {
        const int j = match[i];
        if (j < 0 || affinity[i][j] < params.sim_threshold) continue;
        out.cur_to_prev[i] = j;
        out.total_affinity += affinity[i][j];
    }
    return out;
}

// A person identity over frames.
struct Track {
    std::int64_t id = 0;
    std::map<std::int64_t, TrackedInstance> entries; // frame -> instance
};

struct TrackBuildResult {
    std::vector<Track> tracks;
    // ids[frame][instance] mirrors the input layout.
    std::vector<std::vector<std::int64_t>> ids;
};

// Sequential association over consecutive frames. Ids are stable once
// assigned and are never revived across a gap: a person missing for one frame
// comes back as a new track.
inline TrackBuildResult
build_tracks(const std::vector<std::vector<TrackedInstance>>& frames,
             const AssociationParams& params) {
    TrackBuildResult result;
    std::map<std::int64_t, size_t> track_index;
    std::int64_t next_id = 1;

    std::vector<std::int64_t> prev_ids;
    for (size_t f = 0; f < frames.size(); ++f) {
        const auto& cur = frames[f];
        std::vector<std::int64_t> cur_ids(cur.size(), 0);

        Association assoc;
        if (f > 0)
            assoc = associate_frames(frames[f - 1], cur, params);
        else
            assoc.cur_to_prev.assign(cur.size(), -1);

        for (size_t i = 0; i < cur.size(); ++i) {
            const int j = assoc.cur_to_prev[i];
            cur_ids[i] = j >= 0 ? prev_ids[j] : next_id++;
        }

        for (size_t i = 0; i < cur.size(); ++i) {
            const std::int64_t id = cur_ids[i];
            auto it = track_index.find(id);
            if (it == track_index.end()) {
                track_index[id] = result.tracks.size();
                result.tracks.push_back(Track{id, {}});
                it = track_index.find(id);
            }
            TrackedInstance inst = cur[i];
            inst.pose.track_id = id;
            inst.pose.frame = static_cast<std::int64_t>(f);
            result.tracks[it->second].entries[static_cast<std::int64_t>(f)] =
                std::move(inst);
        }

        result.ids.push_back(cur_ids);
        prev_ids = std::move(cur_ids);
    }
    return result;
}

} // namespace posekit
