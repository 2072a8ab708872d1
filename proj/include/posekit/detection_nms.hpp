#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "posekit/error.hpp"
#include "posekit/geometry.hpp"

namespace posekit {

namespace detail {

// Stable descending-score order; equal scores keep input order.
inline std::vector<size_t> score_order(const std::vector<DetectionBox>& boxes) {
    std::vector<size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return boxes[a].score > boxes[b].score;
    });
    return order;
}

inline std::vector<size_t>
greedy_suppress_indices(const std::vector<DetectionBox>& boxes,
                        double iou_threshold, bool exempt_same_proposal) {
    require(iou_threshold >= 0.0 && iou_threshold <= 1.0,
            "iou threshold must be in [0, 1]");
    for (const auto& b : boxes) require_valid_box(b);

    const auto order = score_order(boxes);
    std::vector<size_t> kept;
    for (size_t idx : order) {
        const DetectionBox& cand = boxes[idx];
        bool suppressed = false;
        for (size_t k : kept) {
            const DetectionBox& keeper = boxes[k];
            if (exempt_same_proposal && keeper.proposal_id && cand.proposal_id &&
                *keeper.proposal_id == *cand.proposal_id)
                continue;
            if (iou(keeper, cand) > iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(idx);
    }
    return kept;
}

inline std::vector<DetectionBox>
greedy_suppress(const std::vector<DetectionBox>& boxes, double iou_threshold,
                bool exempt_same_proposal) {
    std::vector<DetectionBox> out;
    for (size_t idx :
         greedy_suppress_indices(boxes, iou_threshold, exempt_same_proposal))
        out.push_back(boxes[idx]);
    return out;
}

} // namespace detail

// Kept input indices in output (descending score) order.
inline std::vector<size_t> nms_indices(const std::vector<DetectionBox>& boxes,
                                       double iou_threshold) {
    return detail::greedy_suppress_indices(boxes, iou_threshold, false);
}

inline std::vector<size_t>
set_nms_indices(const std::vector<DetectionBox>& boxes, double iou_threshold) {
    return detail::greedy_suppress_indices(boxes, iou_threshold, true);
}

// Greedy descending-score suppression. Output is sorted by descending score,
// ties broken by input order.
inline std::vector<DetectionBox> nms(const std::vector<DetectionBox>& boxes,
                                     double iou_threshold) {
    return detail::greedy_suppress(boxes, iou_threshold, false);
}

// Greedy NMS that skips suppression when both boxes carry the same present
// proposal_id, so one proposal may keep several overlapping people. Boxes
// without a proposal_id suppress normally.
inline std::vector<DetectionBox> set_nms(const std::vector<DetectionBox>& boxes,
                                         double iou_threshold) {
    return detail::greedy_suppress(boxes, iou_threshold, true);
}

struct ScoredBox {
    DetectionBox box;
    double score = 0;
};

// Per-pair matching cost; `gt == nullptr` means the prediction is assigned to
// background.
using EmdPairCost =
    std::function<double(const ScoredBox& pred, const DetectionBox* gt)>;

inline EmdPairCost default_emd_cost() {
    return [](const ScoredBox& pred, const DetectionBox* gt) {
        if (gt == nullptr) return pred.score;
        return 1.0 - iou(pred.box, *gt);
    };
}

struct EmdResult {
    double distance = 0;
    // assignment[i] = ground-truth index matched to prediction i, or -1 for
    // background.
    std::vector<int> assignment;
};

// Minimum summed per-pair cost over all one-to-one assignments between the
// K predictions and the ground truth padded with background entries up to K.
// Enumerates all K! assignments, so K is capped at 8.
inline EmdResult emd_set_distance(const std::vector<ScoredBox>& predictions,
                                  const std::vector<DetectionBox>& ground_truth,
                                  const EmdPairCost& cost = default_emd_cost()) {
    const size_t k = predictions.size();
    require(k >= 1, "emd_set_distance: no predictions");
    require(k <= 8, "emd_set_distance: more than 8 predictions is unsupported");
    require(ground_truth.size() <= k,
            "emd_set_distance: more ground-truth boxes than predictions");
    for (const auto& p : predictions) require_valid_box(p.box);
    for (const auto& g : ground_truth) require_valid_box(g);

    // targets 0..G-1 are real boxes, G..K-1 background padding
    const size_t g = ground_truth.size();
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);

    EmdResult best;
    best.distance = std::numeric_limits<double>::infinity();
    do {
        double total = 0;
        for (size_t i = 0; i < k; ++i) {
            const DetectionBox* target =
                static_cast<size_t>(perm[i]) < g ? &ground_truth[perm[i]] : nullptr;
            total += cost(predictions[i], target);
        }
        if (total < best.distance) {
            best.distance = total;
            best.assignment.assign(perm.begin(), perm.end());
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    for (auto& a : best.assignment)
        if (static_cast<size_t>(a) >= g) a = -1;
    return best;
}

struct ModelDetections {
    double weight = 1.0;
    std::vector<DetectionBox> boxes;
};

// Ensemble fusion: boxes from all models are clustered greedily in descending
// score order against each cluster's running fused box (IoU >= threshold
// joins). A cluster's coordinates are the (model weight x score)-weighted
// mean; its score is the weight-weighted mean score scaled by the fraction of
// distinct models that contributed.
inline std::vector<DetectionBox>
weighted_box_fusion(const std::vector<ModelDetections>& model_outputs,
                    double iou_threshold) {
    require(iou_threshold >= 0.0 && iou_threshold <= 1.0,
            "iou threshold must be in [0, 1]");
    require(!model_outputs.empty(), "weighted_box_fusion: no model outputs");
    for (const auto& mo : model_outputs)
        require(mo.weight > 0.0, "weighted_box_fusion: weights must be positive");

    struct Tagged {
        DetectionBox box;
        double weight;
        int model;
    };
    std::vector<Tagged> pool;
    for (size_t m = 0; m < model_outputs.size(); ++m) {
        for (const auto& b : model_outputs[m].boxes) {
            require_valid_box(b);
            pool.push_back({b, model_outputs[m].weight, static_cast<int>(m)});
        }
    }
    std::stable_sort(pool.begin(), pool.end(), [](const Tagged& a, const Tagged& b) {
        return a.box.score > b.box.score;
    });

    struct Cluster {
        DetectionBox fused;       // running weighted mean
        double coord_wsum = 0;    // sum of weight*score
        double score_wsum = 0;    // sum of weight*score
        double weight_sum = 0;    // sum of weight
        double sx0 = 0, sy0 = 0, sx1 = 0, sy1 = 0;
        std::vector<int> models;

        void add(const Tagged& t) {
            const double cw = t.weight * t.box.score;
            coord_wsum += cw;
            sx0 += cw * t.box.x0;
            sy0 += cw * t.box.y0;
            sx1 += cw * t.box.x1;
            sy1 += cw * t.box.y1;
            score_wsum += t.weight * t.box.score;
            weight_sum += t.weight;
            if (std::find(models.begin(), models.end(), t.model) == models.end())
                models.push_back(t.model);
            fused.x0 = sx0 / coord_wsum;
            fused.y0 = sy0 / coord_wsum;
            fused.x1 = sx1 / coord_wsum;
            fused.y1 = sy1 / coord_wsum;
            fused.score = score_wsum / weight_sum;
        }
    };

    std::vector<Cluster> clusters;
    for (const Tagged& t : pool) {
        Cluster* home = nullptr;
        for (Cluster& c : clusters) {
            if (iou(c.fused, t.box) >= iou_threshold) {
                home = &c;
                break;
            }
        }
        if (home == nullptr) {
            clusters.emplace_back();
            home = &clusters.back();
        }
        home->add(t);
    }

    const double total_models = static_cast<double>(model_outputs.size());
    std::vector<DetectionBox> out;
    out.reserve(clusters.size());
    for (const Cluster& c : clusters) {
        DetectionBox b = c.fused;
        b.score = c.fused.score * (static_cast<double>(c.models.size()) / total_models);
        out.push_back(b);
    }
    std::stable_sort(out.begin(), out.end(), [](const DetectionBox& a,
                                                const DetectionBox& b) {
        return a.score > b.score;
    });
    return out;
}

} // namespace posekit
