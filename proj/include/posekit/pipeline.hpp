#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "posekit/detection_nms.hpp"
#include "posekit/error.hpp"
#include "posekit/heatmap.hpp"
#include "posekit/io/config.hpp"
#include "posekit/io/image_io.hpp"
#include "posekit/io/jsonl.hpp"
#include "posekit/io/tensor_io.hpp"
#include "posekit/metrics.hpp"
#include "posekit/parallel.hpp"
#include "posekit/pose_nms.hpp"
#include "posekit/render.hpp"
#include "posekit/smoothing.hpp"
#include "posekit/synth.hpp"
#include "posekit/tracking.hpp"

namespace posekit {

namespace detail {

// Heatmap paths inside a detections file are relative to that file's parent.
inline std::string resolve_relative(const std::string& base_file,
                                    const std::string& path) {
    const std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(base_file).parent_path() / p).string();
}

inline Heatmap load_row_heatmap(const DetectionRecord& row,
                                const std::string& file) {
    require(row.heatmap.has_value(),
            file + ": detection row has no heatmap reference");
    return read_heatmap(resolve_relative(file, *row.heatmap),
                        row.heatmap_index.value_or(0));
}

// Re-anchors a row's heatmap reference when the row moves from src_file to
// dst_file; the tensor itself stays where it is.
inline void rebase_heatmap_path(DetectionRecord& row, const std::string& src_file,
                                const std::string& dst_file) {
    if (!row.heatmap) return;
    namespace fs = std::filesystem;
    const fs::path abs =
        fs::absolute(resolve_relative(src_file, *row.heatmap)).lexically_normal();
    const fs::path dst_dir =
        fs::absolute(fs::path(dst_file)).parent_path().lexically_normal();
    const fs::path rel = abs.lexically_relative(dst_dir);
    row.heatmap = rel.empty() ? abs.string() : rel.string();
}

inline std::string frame_file_name(std::int64_t frame, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06lld%s",
                  static_cast<long long>(frame), ext);
    return buf;
}

inline std::string find_frame_file(const std::string& dir, std::int64_t frame) {
    for (const char* ext : {".pgm", ".gry", ".ppm"}) {
        const auto p = std::filesystem::path(dir) / frame_file_name(frame, ext);
        if (std::filesystem::exists(p)) return p.string();
    }
    throw MissingFileError("missing frame image for frame " +
                           std::to_string(frame) + " in " + dir);
}

} // namespace detail

inline FrameLoader directory_frame_loader(const std::string& dir) {
    return [dir](std::int64_t frame) {
        return read_frame(detail::find_frame_file(dir, frame));
    };
}

// ---------------------------------------------------------------- detnms

// Optional cross-model weighted box fusion followed by per-frame (set) NMS.
// Without fusion, rows of all inputs are pooled and row payloads (features,
// heatmap references) ride along through suppression.
inline std::vector<DetectionRecord>
run_detnms(const std::vector<std::vector<DetectionRecord>>& sources,
           const DetNmsConfig& cfg) {
    require(!sources.empty(), "detnms: no inputs");

    std::vector<DetectionRecord> rows;
    if (cfg.fuse_models && sources.size() > 1) {
        // group per frame, fuse across models, payloads do not survive
        auto weight_of = [&](size_t s) {
            return s < cfg.fusion_weights.size() ? cfg.fusion_weights[s] : 1.0;
        };
        std::map<std::int64_t, std::vector<ModelDetections>> per_frame;
        std::map<std::int64_t, std::optional<std::string>> videos;
        for (size_t s = 0; s < sources.size(); ++s) {
            for (const auto& r : sources[s]) {
                auto& models = per_frame[r.frame];
                if (models.empty()) {
                    models.resize(sources.size());
                    for (size_t m = 0; m < models.size(); ++m)
                        models[m].weight = weight_of(m);
                }
                models[s].boxes.push_back(r.box);
                if (r.video) videos[r.frame] = r.video;
            }
        }
        for (const auto& [frame, models] : per_frame) {
            for (const auto& b : weighted_box_fusion(models, cfg.fusion_iou_threshold)) {
                DetectionRecord r;
                r.frame = frame;
                r.box = b;
                r.video = videos[frame];
                rows.push_back(r);
            }
        }
    } else {
        for (const auto& src : sources)
            rows.insert(rows.end(), src.begin(), src.end());
    }

    std::map<std::int64_t, std::vector<size_t>> frames;
    for (size_t i = 0; i < rows.size(); ++i) frames[rows[i].frame].push_back(i);

    std::vector<DetectionRecord> out;
    for (const auto& [frame, idx] : frames) {
        std::vector<DetectionBox> boxes;
        boxes.reserve(idx.size());
        for (size_t i : idx) boxes.push_back(rows[i].box);
        const auto kept = cfg.use_set_nms ? set_nms_indices(boxes, cfg.iou_threshold)
                                          : nms_indices(boxes, cfg.iou_threshold);
        for (size_t k : kept) out.push_back(rows[idx[k]]);
    }
    return out;
}

inline void stage_detnms(const std::vector<std::string>& inputs,
                         const DetNmsConfig& cfg, const std::string& out_path) {
    std::vector<std::vector<DetectionRecord>> sources;
    for (const auto& path : inputs) {
        sources.push_back(read_detections(path));
        for (auto& row : sources.back())
            detail::rebase_heatmap_path(row, path, out_path);
    }
    write_detections(out_path, run_detnms(sources, cfg));
}

// ------------------------------------------------------------------ fuse

// Row-aligned heatmap fusion across sources: all heatmaps of row i are
// resampled onto the first source's grid and averaged with the given weights.
// Fused tensors land in <out_dir>/ht/, referenced from the output JSONL.
inline void stage_fuse(const std::vector<std::string>& inputs,
                       std::vector<double> weights, const std::string& out_path,
                       int threads = 1) {
    require(!inputs.empty(), "fuse: no inputs");
    std::vector<std::vector<DetectionRecord>> sources;
    for (const auto& path : inputs) sources.push_back(read_detections(path));
    const size_t rows = sources[0].size();
    for (const auto& s : sources)
        require(s.size() == rows, "fuse: inputs disagree on row count");
    if (weights.empty()) weights.assign(sources.size(), 1.0);
    require(weights.size() == sources.size(),
            "fuse: weight count does not match input count");

    const auto out_dir = std::filesystem::path(out_path).parent_path();
    const auto ht_dir = out_dir / "ht";
    std::filesystem::create_directories(ht_dir);

    std::vector<DetectionRecord> out_rows(rows);
    parallel_for(rows, threads, [&](size_t i) {
        std::vector<Heatmap> maps;
        maps.reserve(sources.size());
        for (size_t s = 0; s < sources.size(); ++s) {
            require(sources[s][i].frame == sources[0][i].frame,
                    "fuse: inputs disagree on frame order");
            maps.push_back(detail::load_row_heatmap(sources[s][i], inputs[s]));
        }
        const Heatmap& ref = maps[0];
        for (size_t s = 1; s < maps.size(); ++s) {
            if (maps[s].height != ref.height || maps[s].width != ref.width ||
                !maps[s].transform.almost_equal(ref.transform))
                maps[s] = resample_heatmap(maps[s], ref.transform, ref.height,
                                           ref.width);
        }
        const Heatmap fused = fuse_heatmaps(maps, weights);

        char name[32];
        std::snprintf(name, sizeof(name), "fused_%06zu.ht", i);
        write_heatmap((ht_dir / name).string(), fused);

        DetectionRecord r = sources[0][i];
        r.heatmap = (std::filesystem::path("ht") / name).string();
        r.heatmap_index.reset();
        out_rows[i] = std::move(r);
    });
    write_detections(out_path, out_rows);
}

// ---------------------------------------------------------------- decode

inline void stage_decode(const std::string& input, const std::string& out_path,
                         int threads = 1) {
    const auto rows = read_detections(input);
    std::vector<PoseRecord> poses(rows.size());
    parallel_for(rows.size(), threads, [&](size_t i) {
        const Heatmap h = detail::load_row_heatmap(rows[i], input);
        PoseRecord r;
        r.frame = rows[i].frame;
        r.video = rows[i].video;
        r.pose = decode_keypoints(h);
        r.pose.frame = rows[i].frame;
        r.pose.track_id = rows[i].track_id;
        poses[i] = std::move(r);
    });
    int joints = 0;
    for (const auto& r : poses) {
        if (joints == 0) joints = r.pose.joints();
        require(r.pose.joints() == joints, "decode: heatmaps disagree on joint count");
    }
    write_poses(out_path, joints == 0 ? 1 : joints, poses);
}

// --------------------------------------------------------------- posenms

// Suppresses redundant poses per frame; when an aligned detections file is
// given, the same row subset is applied to it so downstream stages stay
// index-aligned.
inline void stage_posenms(const std::string& poses_in,
                          const std::string& detections_in,
                          const PoseNmsConfig& cfg, const std::string& poses_out,
                          const std::string& detections_out) {
    const PoseFile file = read_poses(poses_in);
    std::vector<DetectionRecord> dets;
    const bool aligned = !detections_in.empty();
    if (aligned) {
        dets = read_detections(detections_in);
        require(dets.size() == file.records.size(),
                "posenms: detections are not aligned with poses");
        if (!detections_out.empty())
            for (auto& row : dets)
                detail::rebase_heatmap_path(row, detections_in, detections_out);
    }

    std::map<std::int64_t, std::vector<size_t>> frames;
    for (size_t i = 0; i < file.records.size(); ++i)
        frames[file.records[i].frame].push_back(i);

    const OksParams params = cfg.oks_params(file.skeleton);
    std::vector<PoseRecord> kept_poses;
    std::vector<DetectionRecord> kept_dets;
    for (const auto& [frame, idx] : frames) {
        std::vector<Pose> poses;
        poses.reserve(idx.size());
        for (size_t i : idx) poses.push_back(file.records[i].pose);
        for (size_t k :
             pose_nms_indices(poses, cfg.oks_threshold, cfg.min_score, params)) {
            kept_poses.push_back(file.records[idx[k]]);
            if (aligned) kept_dets.push_back(dets[idx[k]]);
        }
    }
    write_poses(poses_out, file.skeleton, kept_poses);
    if (aligned && !detections_out.empty())
        write_detections(detections_out, kept_dets);
}

// ----------------------------------------------------------------- track

// Assigns track ids by sequential frame association over detection boxes and
// appearance features. When an aligned poses file is given, ids are stamped
// into it as well.
inline void stage_track(const std::string& detections_in,
                        const std::string& poses_in,
                        const AssociationParams& params,
                        const std::string& detections_out,
                        const std::string& poses_out) {
    auto dets = read_detections(detections_in);
    for (auto& row : dets)
        detail::rebase_heatmap_path(row, detections_in, detections_out);
    PoseFile poses;
    const bool aligned = !poses_in.empty();
    if (aligned) {
        poses = read_poses(poses_in);
        require(poses.records.size() == dets.size(),
                "track: poses are not aligned with detections");
    }

    std::map<std::int64_t, std::vector<size_t>> by_frame;
    for (size_t i = 0; i < dets.size(); ++i) by_frame[dets[i].frame].push_back(i);

    std::vector<std::vector<TrackedInstance>> frames;
    std::vector<std::vector<size_t>> frame_rows;
    for (const auto& [frame, idx] : by_frame) {
        std::vector<TrackedInstance> instances;
        for (size_t i : idx) {
            TrackedInstance inst;
            inst.box = dets[i].box;
            if (aligned) inst.pose = poses.records[i].pose;
            inst.feature = dets[i].box.feature;
            instances.push_back(std::move(inst));
        }
        frames.push_back(std::move(instances));
        frame_rows.push_back(idx);
    }

    const TrackBuildResult result = build_tracks(frames, params);
    for (size_t f = 0; f < frame_rows.size(); ++f) {
        for (size_t i = 0; i < frame_rows[f].size(); ++i) {
            const size_t row = frame_rows[f][i];
            dets[row].track_id = result.ids[f][i];
            if (aligned) poses.records[row].pose.track_id = result.ids[f][i];
        }
    }
    write_detections(detections_out, dets);
    if (aligned && !poses_out.empty())
        write_poses(poses_out, poses.skeleton, poses.records);
}

// ---------------------------------------------------------------- smooth

inline void stage_smooth(const std::string& poses_in,
                         const std::string& frames_dir,
                         VideoSmoothingParams params,
                         const std::string& poses_out,
                         const std::string& flow_dump_path = "") {
    std::ofstream dump;
    if (!flow_dump_path.empty()) {
        dump.open(flow_dump_path);
        if (!dump)
            throw MissingFileError("cannot open for writing: " + flow_dump_path);
        params.flow_dump = [&dump](std::int64_t frame, std::int64_t joint,
                                   const FlowVector& f) {
            dump << "{\"dx\":" << detail::fmt_fixed(f.dx)
                 << ",\"dy\":" << detail::fmt_fixed(f.dy) << ",\"frame\":" << frame
                 << ",\"joint\":" << joint
                 << ",\"valid\":" << (f.valid ? "true" : "false") << "}\n";
        };
    }
    const PoseFile file = read_poses(poses_in);
    std::int64_t max_frame = -1;
    for (const auto& r : file.records) max_frame = std::max(max_frame, r.frame);

    std::vector<std::vector<Pose>> pose_frames(static_cast<size_t>(max_frame + 1));
    std::vector<std::vector<size_t>> row_of(static_cast<size_t>(max_frame + 1));
    for (size_t i = 0; i < file.records.size(); ++i) {
        pose_frames[static_cast<size_t>(file.records[i].frame)].push_back(
            file.records[i].pose);
        row_of[static_cast<size_t>(file.records[i].frame)].push_back(i);
    }

    const auto smoothed =
        smooth_video(pose_frames, directory_frame_loader(frames_dir), params);

    std::vector<PoseRecord> out = file.records;
    for (size_t f = 0; f < smoothed.size(); ++f)
        for (size_t i = 0; i < smoothed[f].size(); ++i)
            out[row_of[f][i]].pose = smoothed[f][i];
    write_poses(poses_out, file.skeleton, out);
}

// ------------------------------------------------------------------ eval

namespace detail {

inline std::map<std::string, double> read_weights_file(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw MissingFileError("missing weights file: " + path);
    std::ifstream is(path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInputError(path + ": bad JSON: " + e.what());
    }
    require(j.is_object(), path + ": weights file must map video -> weight");
    std::map<std::string, double> out;
    for (const auto& [k, v] : j.items()) {
        require(v.is_number(), path + ": weights must be numbers");
        out[k] = v.get<double>();
    }
    return out;
}

template <typename Record>
std::map<std::string, std::vector<Record>>
group_by_video(const std::vector<Record>& records) {
    std::map<std::string, std::vector<Record>> out;
    for (const auto& r : records) out[r.video.value_or("default")].push_back(r);
    return out;
}

template <typename Record>
double video_frame_count(const std::vector<Record>& a, const std::vector<Record>& b) {
    std::set<std::int64_t> frames;
    for (const auto& r : a) frames.insert(r.frame);
    for (const auto& r : b) frames.insert(r.frame);
    return std::max<double>(1.0, static_cast<double>(frames.size()));
}

} // namespace detail

// Per-video OKS-matched keypoint AP with weighted aggregation. Weights default
// to per-video frame counts; TP/FP/FN are counted at the first OKS threshold.
inline EvalReport
evaluate_keypoints(const std::vector<PoseRecord>& pred,
                   const std::vector<PoseRecord>& gt,
                   std::vector<double> oks_thresholds, const OksParams& params,
                   const std::map<std::string, double>& weights = {}) {
    if (oks_thresholds.empty()) oks_thresholds = default_oks_thresholds();
    const auto pred_by_video = detail::group_by_video(pred);
    const auto gt_by_video = detail::group_by_video(gt);

    std::set<std::string> names;
    for (const auto& [k, v] : pred_by_video) names.insert(k);
    for (const auto& [k, v] : gt_by_video) names.insert(k);

    EvalReport report;
    std::map<std::string, std::pair<double, double>> per_video;
    for (const auto& name : names) {
        static const std::vector<PoseRecord> kEmpty;
        const auto& p = pred_by_video.count(name) ? pred_by_video.at(name) : kEmpty;
        const auto& g = gt_by_video.count(name) ? gt_by_video.at(name) : kEmpty;
        std::vector<Pose> pp, gg;
        for (const auto& r : p) pp.push_back(r.pose);
        for (const auto& r : g) gg.push_back(r.pose);

        VideoStats stats;
        stats.ap = keypoint_ap(pp, gg, oks_thresholds, params);

        // counts at the first threshold
        std::map<std::int64_t, std::pair<std::vector<size_t>, std::vector<size_t>>> frames;
        for (size_t i = 0; i < pp.size(); ++i)
            frames[pp[i].frame.value_or(0)].first.push_back(i);
        for (size_t i = 0; i < gg.size(); ++i)
            frames[gg[i].frame.value_or(0)].second.push_back(i);
        for (const auto& [frame, fr] : frames) {
            std::vector<double> scores;
            for (size_t i : fr.first) scores.push_back(pp[i].score);
            auto sim = [&](size_t a, size_t b) {
                const Pose& gtp = gg[fr.second[b]];
                return oks(gtp, pp[fr.first[a]], pose_area(gtp), params);
            };
            const auto m = match_greedy(scores, fr.second.size(), sim,
                                        oks_thresholds.front());
            for (int v : m.pred_to_gt) (v >= 0 ? stats.tp : stats.fp)++;
            stats.fn += static_cast<std::int64_t>(m.unmatched_gt.size());
        }

        report.videos[name] = stats;
        const double w = weights.count(name) ? weights.at(name)
                                             : detail::video_frame_count(p, g);
        per_video[name] = {stats.ap, w};
    }
    report.weighted_ap = per_video.empty() ? 0.0 : weighted_ap(per_video);
    return report;
}

// Per-video IoU-matched detection AP plus pooled log-average miss rate.
inline EvalReport
evaluate_detections(const std::vector<DetectionRecord>& pred,
                    const std::vector<DetectionRecord>& gt, double iou_threshold,
                    const std::map<std::string, double>& weights = {}) {
    const auto pred_by_video = detail::group_by_video(pred);
    const auto gt_by_video = detail::group_by_video(gt);
    std::set<std::string> names;
    for (const auto& [k, v] : pred_by_video) names.insert(k);
    for (const auto& [k, v] : gt_by_video) names.insert(k);

    EvalReport report;
    std::map<std::string, std::pair<double, double>> per_video;
    std::vector<std::vector<DetectionBox>> all_pred_frames, all_gt_frames;
    for (const auto& name : names) {
        static const std::vector<DetectionRecord> kEmpty;
        const auto& p = pred_by_video.count(name) ? pred_by_video.at(name) : kEmpty;
        const auto& g = gt_by_video.count(name) ? gt_by_video.at(name) : kEmpty;

        std::map<std::int64_t, std::pair<std::vector<DetectionBox>,
                                         std::vector<DetectionBox>>> frames;
        for (const auto& r : p) frames[r.frame].first.push_back(r.box);
        for (const auto& r : g) frames[r.frame].second.push_back(r.box);

        detail::PooledFlags pooled;
        VideoStats stats;
        size_t gt_count = 0;
        for (const auto& [frame, fr] : frames) {
            const auto& [pb, gb] = fr;
            std::vector<double> scores;
            for (const auto& b : pb) scores.push_back(b.score);
            auto sim = [&](size_t a, size_t b) { return iou(pb[a], gb[b]); };
            const auto m = match_greedy(scores, gb.size(), sim, iou_threshold);
            for (size_t i = 0; i < pb.size(); ++i)
                pooled.add(scores[i], m.pred_to_gt[i] >= 0);
            for (int v : m.pred_to_gt) (v >= 0 ? stats.tp : stats.fp)++;
            stats.fn += static_cast<std::int64_t>(m.unmatched_gt.size());
            gt_count += gb.size();
            all_pred_frames.push_back(pb);
            all_gt_frames.push_back(gb);
        }
        pooled.sort_by_score();
        stats.ap = average_precision(pooled.tp, gt_count);
        report.videos[name] = stats;
        const double w = weights.count(name) ? weights.at(name)
                                             : detail::video_frame_count(p, g);
        per_video[name] = {stats.ap, w};
    }
    report.weighted_ap = per_video.empty() ? 0.0 : weighted_ap(per_video);

    size_t total_gt = 0;
    for (const auto& f : all_gt_frames) total_gt += f.size();
    if (!all_pred_frames.empty() && total_gt > 0)
        report.mmr = log_average_miss_rate(
            miss_rate_curve(all_pred_frames, all_gt_frames, iou_threshold));
    return report;
}

inline nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["weighted_ap"] = report.weighted_ap;
    j["mmr"] = report.mmr ? nlohmann::json(*report.mmr) : nlohmann::json(nullptr);
    j["videos"] = nlohmann::json::object();
    for (const auto& [name, stats] : report.videos) {
        j["videos"][name] = {{"ap", stats.ap},
                             {"tp", stats.tp},
                             {"fp", stats.fp},
                             {"fn", stats.fn}};
    }
    return j;
}

inline EvalReport stage_eval(const std::string& pred_path,
                             const std::string& gt_path, const EvalConfig& cfg,
                             const PoseNmsConfig& posenms_cfg,
                             const std::string& weights_path,
                             const std::string& report_path) {
    std::map<std::string, double> weights;
    if (!weights_path.empty()) weights = detail::read_weights_file(weights_path);

    EvalReport report;
    if (cfg.task == "kp") {
        const PoseFile pred = read_poses(pred_path);
        const PoseFile gt = read_poses(gt_path);
        require(pred.skeleton == 0 || gt.skeleton == 0 ||
                    pred.skeleton == gt.skeleton,
                "eval: prediction and ground-truth skeletons differ");
        const int joints = std::max(pred.skeleton, gt.skeleton);
        report = evaluate_keypoints(pred.records, gt.records, cfg.oks_thresholds,
                                    posenms_cfg.oks_params(joints), weights);
    } else if (cfg.task == "det") {
        report = evaluate_detections(read_detections(pred_path),
                                     read_detections(gt_path),
                                     cfg.iou_threshold, weights);
    } else {
        throw InvalidInputError("eval: unknown task '" + cfg.task + "'");
    }

    if (!report_path.empty()) {
        std::ofstream os(report_path);
        if (!os) throw MissingFileError("cannot open for writing: " + report_path);
        os << report_to_json(report).dump(2) << "\n";
    }
    return report;
}

// --------------------------------------------------------------- overlay

inline void stage_overlay(const std::string& frames_dir,
                          const std::string& poses_path,
                          const std::string& detections_path,
                          const SkeletonDef& skeleton,
                          const std::string& out_dir) {
    const PoseFile poses = read_poses(poses_path);
    std::vector<DetectionRecord> dets;
    if (!detections_path.empty()) dets = read_detections(detections_path);

    std::set<std::int64_t> frames;
    for (const auto& r : poses.records) frames.insert(r.frame);
    for (const auto& r : dets) frames.insert(r.frame);

    std::filesystem::create_directories(out_dir);
    for (std::int64_t f : frames) {
        const GrayImage frame = read_frame(detail::find_frame_file(frames_dir, f));
        std::vector<Pose> fp;
        std::vector<DetectionBox> fb;
        for (const auto& r : poses.records)
            if (r.frame == f) fp.push_back(r.pose);
        for (const auto& r : dets)
            if (r.frame == f) fb.push_back(r.box);
        const RgbImage img = render_overlay(frame, fp, fb, skeleton);
        write_ppm((std::filesystem::path(out_dir) /
                   detail::frame_file_name(f, ".ppm")).string(),
                  img);
    }
}

// ----------------------------------------------------------------- synth

inline void stage_synth(const SynthSpec& spec, const std::string& out_dir,
                        bool with_heatmaps) {
    const SynthResult result = synth_video(spec);
    const std::filesystem::path root(out_dir);
    const auto frames_dir = root / "frames";
    std::filesystem::create_directories(frames_dir);
    if (with_heatmaps) std::filesystem::create_directories(root / "ht");

    for (size_t k = 0; k < result.frames.size(); ++k)
        write_pgm((frames_dir / detail::frame_file_name(
                                    static_cast<std::int64_t>(k), ".pgm"))
                      .string(),
                  result.frames[k]);

    std::vector<PoseRecord> poses;
    for (const auto& frame : result.poses)
        poses.insert(poses.end(), frame.begin(), frame.end());
    write_poses((root / "gt_poses.jsonl").string(), 14, poses);

    std::vector<DetectionRecord> dets;
    for (size_t k = 0; k < result.detections.size(); ++k) {
        for (size_t i = 0; i < result.detections[k].size(); ++i) {
            DetectionRecord r = result.detections[k][i];
            if (with_heatmaps) {
                char name[48];
                std::snprintf(name, sizeof(name), "inst_%06zu_%02zu.ht", k, i);
                write_heatmap((root / "ht" / name).string(),
                              ideal_heatmap(result.poses[k][i].pose, r.box));
                r.heatmap = (std::filesystem::path("ht") / name).string();
            }
            dets.push_back(std::move(r));
        }
    }
    write_detections((root / "detections.jsonl").string(), dets);
}

// ------------------------------------------------------------------- run

// Executes the configured stage chain, materializing every intermediate under
// config.out_dir. A stage failure aborts with the stage name; outputs written
// so far stay on disk.
inline void run_pipeline(const PipelineConfig& config, bool verbose = false) {
    config.validate();
    require(!config.stages.empty(), "run: no stages configured");
    auto require_path = [](const std::string& path, const char* what) {
        if (!path.empty() && !std::filesystem::exists(path))
            throw MissingFileError(std::string("missing ") + what + ": " + path);
    };
    for (const auto& path : config.detections_paths)
        require_path(path, "input");
    require_path(config.poses_path, "input");
    require_path(config.weights_path, "weights file");
    auto has_stage = [&](const char* name) {
        return std::find(config.stages.begin(), config.stages.end(), name) !=
               config.stages.end();
    };
    if (has_stage("smooth") || has_stage("overlay"))
        require_path(config.frames_dir, "frames directory");
    if (has_stage("eval")) require_path(config.gt_poses_path, "ground truth");

    const std::filesystem::path out(config.out_dir);
    std::filesystem::create_directories(out);

    std::vector<std::string> current_dets = config.detections_paths;
    std::string current_poses = config.poses_path;

    auto log = [&](const std::string& msg) {
        if (verbose) std::cerr << "[run] " << msg << "\n";
    };

    for (const std::string& stage : config.stages) {
        try {
            if (stage == "detnms") {
                const auto dst = (out / "detnms.jsonl").string();
                stage_detnms(current_dets, config.detnms, dst);
                current_dets = {dst};
            } else if (stage == "fuse") {
                const auto dst = (out / "fused.jsonl").string();
                stage_fuse(current_dets, config.fusion_weights, dst, config.threads);
                current_dets = {dst};
            } else if (stage == "decode") {
                require(current_dets.size() == 1,
                        "decode: expected a single detections input; run detnms "
                        "or fuse first");
                const auto dst = (out / "decoded.jsonl").string();
                stage_decode(current_dets[0], dst, config.threads);
                current_poses = dst;
            } else if (stage == "posenms") {
                require(!current_poses.empty(), "posenms: no poses yet; run decode first");
                const auto pdst = (out / "posenms.jsonl").string();
                const auto ddst = (out / "posenms_detections.jsonl").string();
                stage_posenms(current_poses, current_dets.size() == 1 ? current_dets[0] : "",
                              config.posenms, pdst,
                              current_dets.size() == 1 ? ddst : "");
                current_poses = pdst;
                if (current_dets.size() == 1) current_dets = {ddst};
            } else if (stage == "track") {
                require(current_dets.size() == 1, "track: expected a single detections input");
                const auto ddst = (out / "tracked_detections.jsonl").string();
                const auto pdst = (out / "tracked.jsonl").string();
                stage_track(current_dets[0], current_poses, config.association,
                            ddst, current_poses.empty() ? "" : pdst);
                current_dets = {ddst};
                if (!current_poses.empty()) current_poses = pdst;
            } else if (stage == "smooth") {
                require(!current_poses.empty(), "smooth: no poses yet; run decode first");
                require(!config.frames_dir.empty(), "smooth: frames_dir not configured");
                VideoSmoothingParams params;
                params.smoothing = config.smoothing;
                params.pyramid = config.flow;
                params.association = config.association;
                params.passes = config.passes;
                params.threads = config.threads;
                const auto dst = (out / "smoothed.jsonl").string();
                stage_smooth(current_poses, config.frames_dir, params, dst);
                current_poses = dst;
            } else if (stage == "eval") {
                std::string pred = config.eval.task == "det"
                                       ? (current_dets.size() == 1 ? current_dets[0] : "")
                                       : current_poses;
                require(!pred.empty(), "eval: nothing to evaluate yet");
                require(!config.gt_poses_path.empty(),
                        "eval: paths.gt_poses not configured");
                stage_eval(pred, config.gt_poses_path, config.eval, config.posenms,
                           config.weights_path, (out / "report.json").string());
            } else if (stage == "overlay") {
                require(!current_poses.empty(), "overlay: no poses yet");
                require(!config.frames_dir.empty(), "overlay: frames_dir not configured");
                stage_overlay(config.frames_dir, current_poses,
                              current_dets.size() == 1 ? current_dets[0] : "",
                              config.skeleton, (out / "overlays").string());
            } else {
                throw InvalidInputError("run: unknown stage '" + stage + "'");
            }
        } catch (const MissingFileError& e) {
            throw MissingFileError("stage " + stage + ": " + e.what());
        } catch (const InvalidInputError& e) {
            throw InvalidInputError("stage " + stage + ": " + e.what());
        }
        log("stage " + stage + " done");
    }
}

} // namespace posekit
