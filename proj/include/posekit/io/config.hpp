#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "posekit/error.hpp"
#include "posekit/flow.hpp"
#include "posekit/pose_nms.hpp"
#include "posekit/skeleton.hpp"
#include "posekit/smoothing.hpp"
#include "posekit/tracking.hpp"

namespace posekit {

struct DetNmsConfig {
    double iou_threshold = 0.5;
    bool use_set_nms = true;
    bool fuse_models = false;
    double fusion_iou_threshold = 0.55;
    std::vector<double> fusion_weights; // per input file; empty = all 1
};

struct PoseNmsConfig {
    double oks_threshold = 0.7;
    double min_score = 0.05;
    double sigma = 0.08; // uniform fallback when no per-joint table is given
    std::vector<double> sigmas;

    OksParams oks_params(int joints) const {
        if (!sigmas.empty()) {
            require(static_cast<int>(sigmas.size()) == joints,
                    "posenms sigma table does not match skeleton");
            OksParams p;
            p.sigmas = sigmas;
            return p;
        }
        return OksParams::uniform(joints, sigma);
    }
};

struct EvalConfig {
    std::string task = "kp"; // "kp" | "det"
    std::vector<double> oks_thresholds;
    double iou_threshold = 0.5;
};

struct PipelineConfig {
    int version = 1;
    SkeletonDef skeleton = default_skeleton_14();
    std::vector<double> scales = {0.7, 1.0, 1.3};
    std::vector<double> fusion_weights; // heatmap fusion, per source
    DetNmsConfig detnms;
    PoseNmsConfig posenms;
    SmoothingParams smoothing;
    PyramidParams flow;
    AssociationParams association;
    EvalConfig eval;
    int passes = 1;
    std::uint64_t seed = 0;
    int threads = 1;

    std::vector<std::string> stages; // executed in order by `run`
    std::vector<std::string> detections_paths;
    std::string poses_path; // seed for pose-consuming stage chains
    std::string frames_dir;
    std::string gt_poses_path;
    std::string weights_path;
    std::string out_dir = ".";

    void validate() const {
        require(version == 1, "unsupported config schema version");
        skeleton.validate();
        for (double s : scales) require(s > 0.0, "scale factors must be positive");
        smoothing.validate();
        flow.validate();
        require(passes >= 1, "passes must be >= 1");
        require(threads >= 1, "threads must be >= 1");
        require(eval.task == "kp" || eval.task == "det",
                "eval task must be 'kp' or 'det'");
    }
};

namespace detail {

inline double cfg_num(const nlohmann::json& o, const char* key, double fallback) {
    if (!o.contains(key)) return fallback;
    require(o[key].is_number(), std::string("config field '") + key +
                                    "' must be a number");
    return o[key].get<double>();
}

inline bool cfg_bool(const nlohmann::json& o, const char* key, bool fallback) {
    if (!o.contains(key)) return fallback;
    require(o[key].is_boolean(), std::string("config field '") + key +
                                     "' must be a boolean");
    return o[key].get<bool>();
}

inline std::vector<double> cfg_num_list(const nlohmann::json& o, const char* key,
                                        std::vector<double> fallback) {
    if (!o.contains(key)) return fallback;
    require(o[key].is_array(), std::string("config field '") + key +
                                   "' must be an array");
    std::vector<double> out;
    for (const auto& v : o[key]) {
        require(v.is_number(), std::string("config field '") + key +
                                   "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

} // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& j) {
    require(j.is_object(), "config must be a JSON object");
    PipelineConfig c;
    if (j.contains("version")) {
        require(j["version"].is_number_integer(), "config version must be an integer");
        c.version = j["version"].get<int>();
    }
    require(c.version == 1, "unsupported config schema version " +
                                std::to_string(c.version));

    if (j.contains("skeleton")) {
        const auto& s = j["skeleton"];
        require(s.is_object(), "config skeleton must be an object");
        SkeletonDef def;
        def.joints = static_cast<int>(detail::cfg_num(s, "joints", 14));
        if (s.contains("names")) {
            for (const auto& n : s["names"]) def.names.push_back(n.get<std::string>());
        }
        auto pairs_of = [&](const char* key) {
            std::vector<std::pair<int, int>> out;
            if (!s.contains(key)) return out;
            require(s[key].is_array(), std::string("skeleton ") + key +
                                           " must be an array of pairs");
            for (const auto& p : s[key]) {
                require(p.is_array() && p.size() == 2,
                        std::string("skeleton ") + key + " entries must be pairs");
                out.emplace_back(p[0].get<int>(), p[1].get<int>());
            }
            return out;
        };
        def.flip_pairs = pairs_of("flip_pairs");
        def.edges = pairs_of("edges");
        if (def.flip_pairs.empty() && def.joints == 14)
            def.flip_pairs = default_skeleton_14().flip_pairs;
        if (def.edges.empty() && def.joints == 14)
            def.edges = default_skeleton_14().edges;
        c.skeleton = def;
    }

    c.scales = detail::cfg_num_list(j, "scales", c.scales);
    c.fusion_weights = detail::cfg_num_list(j, "fusion_weights", {});

    if (j.contains("detnms")) {
        const auto& d = j["detnms"];
        c.detnms.iou_threshold = detail::cfg_num(d, "iou_threshold", 0.5);
        c.detnms.use_set_nms = detail::cfg_bool(d, "use_set_nms", true);
        c.detnms.fuse_models = detail::cfg_bool(d, "fuse_models", false);
        c.detnms.fusion_iou_threshold = detail::cfg_num(d, "fusion_iou_threshold", 0.55);
        c.detnms.fusion_weights = detail::cfg_num_list(d, "fusion_weights", {});
    }
    if (j.contains("posenms")) {
        const auto& p = j["posenms"];
        c.posenms.oks_threshold = detail::cfg_num(p, "oks_threshold", 0.7);
        c.posenms.min_score = detail::cfg_num(p, "min_score", 0.05);
        c.posenms.sigma = detail::cfg_num(p, "sigma", 0.08);
        c.posenms.sigmas = detail::cfg_num_list(p, "sigmas", {});
    }
    if (j.contains("smoothing")) {
        const auto& s = j["smoothing"];
        c.smoothing.alpha = detail::cfg_num(s, "alpha", 0.25);
        c.smoothing.confidence_threshold = detail::cfg_num(s, "confidence_threshold", 0.3);
        c.smoothing.per_joint_gating = detail::cfg_bool(s, "per_joint_gating", false);
        c.passes = static_cast<int>(detail::cfg_num(s, "passes", 1));
    }
    if (j.contains("flow")) {
        const auto& f = j["flow"];
        c.flow.levels = static_cast<int>(detail::cfg_num(f, "levels", 3));
        c.flow.window_radius = static_cast<int>(detail::cfg_num(f, "window_radius", 10));
        c.flow.max_iterations = static_cast<int>(detail::cfg_num(f, "max_iterations", 30));
        c.flow.epsilon = detail::cfg_num(f, "epsilon", 0.01);
        c.flow.min_eigenvalue = detail::cfg_num(f, "min_eigenvalue", 1e-4);
    }
    if (j.contains("association")) {
        const auto& a = j["association"];
        c.association.sim_threshold = detail::cfg_num(a, "sim_threshold", 0.4);
        c.association.iou_weight = detail::cfg_num(a, "iou_weight", 0.3);
    }
    if (j.contains("eval")) {
        const auto& e = j["eval"];
        if (e.contains("task")) c.eval.task = e["task"].get<std::string>();
        c.eval.oks_thresholds = detail::cfg_num_list(e, "oks_thresholds", {});
        c.eval.iou_threshold = detail::cfg_num(e, "iou_threshold", 0.5);
    }
    if (j.contains("seed"))
        c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads"))
        c.threads = static_cast<int>(detail::cfg_num(j, "threads", 1));

    if (j.contains("stages")) {
        require(j["stages"].is_array(), "config stages must be an array");
        for (const auto& s : j["stages"]) c.stages.push_back(s.get<std::string>());
    }
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        if (p.contains("detections")) {
            if (p["detections"].is_string())
                c.detections_paths.push_back(p["detections"].get<std::string>());
            else
                for (const auto& d : p["detections"])
                    c.detections_paths.push_back(d.get<std::string>());
        }
        if (p.contains("poses")) c.poses_path = p["poses"].get<std::string>();
        if (p.contains("frames_dir")) c.frames_dir = p["frames_dir"].get<std::string>();
        if (p.contains("gt_poses")) c.gt_poses_path = p["gt_poses"].get<std::string>();
        if (p.contains("weights")) c.weights_path = p["weights"].get<std::string>();
        if (p.contains("out_dir")) c.out_dir = p["out_dir"].get<std::string>();
    }

    c.validate();
    return c;
}

inline PipelineConfig load_config(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw MissingFileError("missing config file: " + path);
    std::ifstream is(path);
    if (!is) throw MissingFileError("cannot open: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInputError(path + ": bad JSON: " + e.what());
    }
    try {
        return parse_config(j);
    } catch (const InvalidInputError& e) {
        throw InvalidInputError(path + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInputError(path + ": bad config value: " + e.what());
    }
}

} // namespace posekit
