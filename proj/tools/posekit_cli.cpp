// Command-line frontend for the posekit toolkit. Every pipeline stage is
// individually invocable; `run` chains them from a config file.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "posekit/posekit.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidInput = 2;
constexpr int kExitMissingFile = 3;
constexpr int kExitInternal = 4;

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    int threads = 1;
    bool verbose = false;
};

posekit::PipelineConfig base_config(const GlobalOpts& g) {
    posekit::PipelineConfig cfg;
    if (!g.config_path.empty()) cfg = posekit::load_config(g.config_path);
    if (g.seed != 0) cfg.seed = g.seed;
    if (g.threads != 1) cfg.threads = g.threads;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"posekit: crowd video pose post-processing toolkit"};
    app.require_subcommand(1);

    GlobalOpts global;
    app.add_option("--config", global.config_path, "pipeline config JSON");
    app.add_option("--seed", global.seed, "RNG seed override");
    app.add_option("--threads", global.threads, "worker threads");
    app.add_flag("--verbose", global.verbose, "log progress to stderr");

    // fuse
    auto* fuse = app.add_subcommand("fuse", "fuse heatmaps across row-aligned inputs");
    std::vector<std::string> fuse_inputs;
    std::vector<double> fuse_weights;
    std::string fuse_out;
    fuse->add_option("--in", fuse_inputs, "detections JSONL with heatmap refs")
        ->required();
    fuse->add_option("--weights", fuse_weights, "per-input fusion weights");
    fuse->add_option("--out", fuse_out, "output detections JSONL")->required();

    // detnms
    auto* detnms = app.add_subcommand("detnms", "box fusion and (set) NMS");
    std::vector<std::string> detnms_inputs;
    std::string detnms_out;
    double detnms_iou = 0.5;
    bool detnms_plain = false;
    bool detnms_fuse = false;
    double detnms_fusion_iou = 0.55;
    std::vector<double> detnms_weights;
    detnms->add_option("--in", detnms_inputs, "detections JSONL")->required();
    detnms->add_option("--out", detnms_out, "output JSONL")->required();
    detnms->add_option("--iou", detnms_iou, "suppression IoU threshold");
    detnms->add_flag("--plain-nms", detnms_plain, "ignore proposal groups");
    detnms->add_flag("--fuse-models", detnms_fuse, "weighted box fusion first");
    detnms->add_option("--fusion-iou", detnms_fusion_iou, "fusion cluster threshold");
    detnms->add_option("--weights", detnms_weights, "per-input model weights");

    // decode
    auto* decode = app.add_subcommand("decode", "decode heatmaps to poses");
    std::string decode_in, decode_out;
    decode->add_option("--in", decode_in, "detections JSONL with heatmap refs")
        ->required();
    decode->add_option("--out", decode_out, "output poses JSONL")->required();

    // posenms
    auto* posenms = app.add_subcommand("posenms", "pose NMS per frame");
    std::string posenms_in, posenms_out, posenms_det_in, posenms_det_out;
    double posenms_oks = 0.7, posenms_min = 0.05, posenms_sigma = 0.08;
    posenms->add_option("--poses", posenms_in, "poses JSONL")->required();
    posenms->add_option("--out", posenms_out, "output poses JSONL")->required();
    posenms->add_option("--detections", posenms_det_in, "aligned detections JSONL");
    posenms->add_option("--detections-out", posenms_det_out,
                        "filtered aligned detections");
    posenms->add_option("--oks", posenms_oks, "OKS suppression threshold");
    posenms->add_option("--min-score", posenms_min, "minimum instance score");
    posenms->add_option("--sigma", posenms_sigma, "uniform OKS sigma");

    // track
    auto* track = app.add_subcommand("track", "associate detections into tracks");
    std::string track_in, track_out, track_poses_in, track_poses_out;
    double track_sim = 0.4, track_iouw = 0.3;
    track->add_option("--detections", track_in, "detections JSONL")->required();
    track->add_option("--out", track_out, "tracked detections JSONL")->required();
    track->add_option("--poses", track_poses_in, "aligned poses JSONL");
    track->add_option("--poses-out", track_poses_out, "tracked poses JSONL");
    track->add_option("--sim-threshold", track_sim, "association threshold");
    track->add_option("--iou-weight", track_iouw, "IoU weight in the affinity");

    // smooth
    auto* smooth = app.add_subcommand("smooth", "temporal pose smoothing");
    std::string smooth_in, smooth_frames, smooth_out;
    double smooth_alpha = 0.25, smooth_conf = 0.3;
    bool smooth_per_joint = false;
    int smooth_passes = 1;
    smooth->add_option("--poses", smooth_in, "poses JSONL")->required();
    smooth->add_option("--frames", smooth_frames, "frame image directory")->required();
    smooth->add_option("--out", smooth_out, "output poses JSONL")->required();
    smooth->add_option("--alpha", smooth_alpha, "neighbor blend weight");
    smooth->add_option("--smooth-conf", smooth_conf, "confidence gate");
    smooth->add_flag("--per-joint", smooth_per_joint, "per-joint flow gating");
    smooth->add_option("--passes", smooth_passes, "smoothing passes");
    std::string smooth_flow_dump;
    smooth->add_option("--flow-dump", smooth_flow_dump, "flow debug JSONL");

    // eval
    auto* eval = app.add_subcommand("eval", "AP / w-AP / MMR evaluation");
    std::string eval_pred, eval_gt, eval_task = "kp", eval_weights, eval_report;
    double eval_iou = 0.5;
    eval->add_option("--pred", eval_pred, "predictions JSONL")->required();
    eval->add_option("--gt", eval_gt, "ground-truth JSONL")->required();
    eval->add_option("--task", eval_task, "kp or det");
    eval->add_option("--weights", eval_weights, "video weights JSON");
    eval->add_option("--report", eval_report, "report JSON output");
    eval->add_option("--iou", eval_iou, "detection matching IoU");

    // overlay
    auto* overlay = app.add_subcommand("overlay", "render pose overlays");
    std::string ov_frames, ov_poses, ov_dets, ov_out;
    overlay->add_option("--frames", ov_frames, "frame image directory")->required();
    overlay->add_option("--poses", ov_poses, "poses JSONL")->required();
    overlay->add_option("--detections", ov_dets, "boxes JSONL");
    overlay->add_option("--out", ov_out, "output directory")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark video");
    std::string synth_out;
    int synth_frames = 60, synth_persons = 3, synth_w = 256, synth_h = 256;
    bool synth_heatmaps = false;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--frames", synth_frames, "frame count");
    synth->add_option("--persons", synth_persons, "person count (1-4)");
    synth->add_option("--width", synth_w, "frame width");
    synth->add_option("--height", synth_h, "frame height");
    synth->add_flag("--heatmaps", synth_heatmaps, "emit ideal heatmaps");

    // run
    auto* run = app.add_subcommand("run", "execute the configured stage chain");

    // global flags remain usable after the subcommand name
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInvalidInput;
    }

    try {
        if (fuse->parsed()) {
            posekit::stage_fuse(fuse_inputs, fuse_weights, fuse_out, global.threads);
        } else if (detnms->parsed()) {
            posekit::DetNmsConfig cfg;
            cfg.iou_threshold = detnms_iou;
            cfg.use_set_nms = !detnms_plain;
            cfg.fuse_models = detnms_fuse;
            cfg.fusion_iou_threshold = detnms_fusion_iou;
            cfg.fusion_weights = detnms_weights;
            posekit::stage_detnms(detnms_inputs, cfg, detnms_out);
        } else if (decode->parsed()) {
            posekit::stage_decode(decode_in, decode_out, global.threads);
        } else if (posenms->parsed()) {
            posekit::PoseNmsConfig cfg;
            cfg.oks_threshold = posenms_oks;
            cfg.min_score = posenms_min;
            cfg.sigma = posenms_sigma;
            posekit::stage_posenms(posenms_in, posenms_det_in, cfg, posenms_out,
                                   posenms_det_out);
        } else if (track->parsed()) {
            posekit::AssociationParams params;
            params.sim_threshold = track_sim;
            params.iou_weight = track_iouw;
            posekit::stage_track(track_in, track_poses_in, params, track_out,
                                 track_poses_out);
        } else if (smooth->parsed()) {
            posekit::VideoSmoothingParams params;
            if (!global.config_path.empty()) {
                const auto cfg = posekit::load_config(global.config_path);
                params.pyramid = cfg.flow;
                params.association = cfg.association;
            }
            params.smoothing.alpha = smooth_alpha;
            params.smoothing.confidence_threshold = smooth_conf;
            params.smoothing.per_joint_gating = smooth_per_joint;
            params.passes = smooth_passes;
            params.threads = global.threads;
            posekit::stage_smooth(smooth_in, smooth_frames, params, smooth_out,
                                  smooth_flow_dump);
        } else if (eval->parsed()) {
            posekit::PipelineConfig cfg = base_config(global);
            cfg.eval.task = eval_task;
            cfg.eval.iou_threshold = eval_iou;
            const auto report = posekit::stage_eval(
                eval_pred, eval_gt, cfg.eval, cfg.posenms, eval_weights, eval_report);
            std::cout << posekit::report_to_json(report).dump(2) << "\n";
        } else if (overlay->parsed()) {
            posekit::PipelineConfig cfg = base_config(global);
            posekit::stage_overlay(ov_frames, ov_poses, ov_dets, cfg.skeleton, ov_out);
        } else if (synth->parsed()) {
            posekit::require(synth_persons >= 1 && synth_persons <= 4,
                             "synth: persons must be in [1, 4]");
            posekit::SynthSpec spec;
            spec.width = synth_w;
            spec.height = synth_h;
            spec.frames = synth_frames;
            spec.seed = global.seed;
            const double margin = 12;
            const double usable_h = synth_h - 2 * margin;
            const double person_h = std::min(120.0, usable_h / synth_persons - 8);
            const double person_w = person_h * 0.45;
            for (int i = 0; i < synth_persons; ++i) {
                posekit::SynthPerson p;
                p.id = i + 1;
                p.w = person_w;
                p.h = person_h;
                p.y0 = margin + i * (usable_h / synth_persons);
                const bool rightward = i % 2 == 0;
                p.x0 = rightward ? margin : synth_w - margin - p.w;
                const double span = synth_w - 2 * margin - p.w;
                p.vx = (rightward ? 1.0 : -1.0) * span / std::max(1, synth_frames - 1);
                p.vy = 0;
                if (i == 2) {
                    p.amp_y = 6;
                    p.period = synth_frames / 2.0;
                }
                spec.persons.push_back(p);
            }
            posekit::stage_synth(spec, synth_out, synth_heatmaps);
        } else if (run->parsed()) {
            posekit::require(!global.config_path.empty(), "run: --config is required");
            posekit::PipelineConfig cfg = base_config(global);
            posekit::run_pipeline(cfg, global.verbose);
        }
    } catch (const posekit::MissingFileError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissingFile;
    } catch (const posekit::InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}
