#pragma once

#include <string>
#include <utility>
#include <vector>

#include "posekit/error.hpp"

namespace posekit {

// Left/right channel pairs swapped when a heatmap is mirrored.
using JointFlipPairs = std::vector<std::pair<int, int>>;

inline void validate_flip_pairs(const JointFlipPairs& pairs, int joints) {
    std::vector<char> seen(static_cast<size_t>(joints), 0);
    for (const auto& [l, r] : pairs) {
        require(l >= 0 && l < joints && r >= 0 && r < joints,
                "flip pair index out of range");
        require(l != r, "flip pair indices must be distinct");
        require(!seen[static_cast<size_t>(l)] && !seen[static_cast<size_t>(r)],
                "joint index appears in more than one flip pair");
        seen[static_cast<size_t>(l)] = seen[static_cast<size_t>(r)] = 1;
    }
}

struct SkeletonDef {
    int joints = 0;
    JointFlipPairs flip_pairs;
    std::vector<std::string> names;               // empty or size == joints
    std::vector<std::pair<int, int>> edges;       // rendering bones

    void validate() const {
        require(joints >= 1, "skeleton must have at least one joint");
        validate_flip_pairs(flip_pairs, joints);
        require(names.empty() || static_cast<int>(names.size()) == joints,
                "skeleton name list does not match joint count");
        for (const auto& [a, b] : edges)
            require(a >= 0 && a < joints && b >= 0 && b < joints,
                    "skeleton edge index out of range");
    }
};

// Default 14-joint skeleton. The joint ordering and left/right pairing are a
// shipped convention, overridable through the pipeline config.
inline SkeletonDef default_skeleton_14() {
    SkeletonDef s;
    s.joints = 14;
    s.names = {"head",    "neck",    "l_shoulder", "r_shoulder", "l_elbow",
               "r_elbow", "l_wrist", "r_wrist",    "l_hip",      "r_hip",
               "l_knee",  "r_knee",  "l_ankle",    "r_ankle"};
    s.flip_pairs = {{2, 3}, {4, 5}, {6, 7}, {8, 9}, {10, 11}, {12, 13}};
    s.edges = {{0, 1}, {1, 2},  {1, 3},  {2, 4},  {3, 5},   {4, 6},  {5, 7},
               {1, 8}, {1, 9},  {8, 10}, {9, 11}, {10, 12}, {11, 13}};
    return s;
}

} // namespace posekit
