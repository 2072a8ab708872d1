#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "posekit/error.hpp"
#include "posekit/geometry.hpp"
#include "posekit/pose.hpp"

namespace posekit {

// One detections JSONL row. Canonical form: keys sorted alphabetically,
// floats at fixed 6 decimals, so write(read(x)) is byte-stable.
struct DetectionRecord {
    std::int64_t frame = 0;
    DetectionBox box; // holds score, proposal_id, model_id, feature
    std::optional<std::int64_t> track_id;
    std::optional<std::string> video;
    std::optional<std::string> heatmap; // per-instance .ht file
    std::optional<std::int64_t> heatmap_index;
};

struct PoseRecord {
    std::int64_t frame = 0;
    Pose pose; // holds score, track_id
    std::optional<std::string> video;
};

namespace detail {

inline std::string fmt_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string json_string(const std::string& s) {
    return nlohmann::json(s).dump();
}

inline InvalidInputError line_error(const std::string& path, size_t line,
                                    const std::string& what) {
    return InvalidInputError(path + ":" + std::to_string(line) + ": " + what);
}

inline double get_number(const nlohmann::json& obj, const char* key,
                         const std::string& path, size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end())
        throw line_error(path, line, std::string("missing field '") + key + "'");
    if (!it->is_number())
        throw line_error(path, line, std::string("field '") + key + "' must be a number");
    return it->get<double>();
}

inline std::int64_t get_int(const nlohmann::json& obj, const char* key,
                            const std::string& path, size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end())
        throw line_error(path, line, std::string("missing field '") + key + "'");
    if (!it->is_number_integer())
        throw line_error(path, line,
                         std::string("field '") + key + "' must be an integer");
    return it->get<std::int64_t>();
}

} // namespace detail

inline std::string to_jsonl(const DetectionRecord& r) {
    std::string out = "{";
    if (r.box.feature) {
        out += "\"feature\":[";
        for (size_t i = 0; i < r.box.feature->size(); ++i) {
            if (i) out += ",";
            out += detail::fmt_fixed((*r.box.feature)[i]);
        }
        out += "],";
    }
    out += "\"frame\":" + std::to_string(r.frame);
    if (r.heatmap) out += ",\"heatmap\":" + detail::json_string(*r.heatmap);
    if (r.heatmap_index)
        out += ",\"heatmap_index\":" + std::to_string(*r.heatmap_index);
    if (r.box.model_id) out += ",\"model_id\":" + std::to_string(*r.box.model_id);
    if (r.box.proposal_id)
        out += ",\"proposal_id\":" + std::to_string(*r.box.proposal_id);
    out += ",\"score\":" + detail::fmt_fixed(r.box.score);
    if (r.track_id) out += ",\"track_id\":" + std::to_string(*r.track_id);
    if (r.video) out += ",\"video\":" + detail::json_string(*r.video);
    out += ",\"x0\":" + detail::fmt_fixed(r.box.x0);
    out += ",\"x1\":" + detail::fmt_fixed(r.box.x1);
    out += ",\"y0\":" + detail::fmt_fixed(r.box.y0);
    out += ",\"y1\":" + detail::fmt_fixed(r.box.y1);
    out += "}";
    return out;
}

inline DetectionRecord parse_detection_line(const std::string& line,
                                            const std::string& path,
                                            size_t lineno) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw detail::line_error(path, lineno, std::string("bad JSON: ") + e.what());
    }
    if (!obj.is_object())
        throw detail::line_error(path, lineno, "expected a JSON object");

    DetectionRecord r;
    r.frame = detail::get_int(obj, "frame", path, lineno);
    r.box.x0 = detail::get_number(obj, "x0", path, lineno);
    r.box.y0 = detail::get_number(obj, "y0", path, lineno);
    r.box.x1 = detail::get_number(obj, "x1", path, lineno);
    r.box.y1 = detail::get_number(obj, "y1", path, lineno);
    r.box.score = detail::get_number(obj, "score", path, lineno);
    if (!box_valid(r.box))
        throw detail::line_error(path, lineno, "degenerate box extents");
    if (r.box.score < 0.0 || r.box.score > 1.0)
        throw detail::line_error(path, lineno, "score must be in [0, 1]");
    if (obj.contains("proposal_id"))
        r.box.proposal_id = detail::get_int(obj, "proposal_id", path, lineno);
    if (obj.contains("model_id"))
        r.box.model_id = detail::get_int(obj, "model_id", path, lineno);
    if (obj.contains("track_id"))
        r.track_id = detail::get_int(obj, "track_id", path, lineno);
    if (obj.contains("heatmap_index"))
        r.heatmap_index = detail::get_int(obj, "heatmap_index", path, lineno);
    if (obj.contains("heatmap")) {
        if (!obj["heatmap"].is_string())
            throw detail::line_error(path, lineno, "field 'heatmap' must be a string");
        r.heatmap = obj["heatmap"].get<std::string>();
    }
    if (obj.contains("video")) {
        if (!obj["video"].is_string())
            throw detail::line_error(path, lineno, "field 'video' must be a string");
        r.video = obj["video"].get<std::string>();
    }
    if (obj.contains("feature")) {
        if (!obj["feature"].is_array())
            throw detail::line_error(path, lineno, "field 'feature' must be an array");
        std::vector<float> f;
        for (const auto& v : obj["feature"]) {
            if (!v.is_number())
                throw detail::line_error(path, lineno, "feature entries must be numbers");
            f.push_back(v.get<float>());
        }
        r.box.feature = std::move(f);
    }
    return r;
}

inline std::vector<DetectionRecord> read_detections(std::istream& is,
                                                    const std::string& path) {
    std::vector<DetectionRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        out.push_back(parse_detection_line(line, path, lineno));
    }
    return out;
}

inline std::vector<DetectionRecord> read_detections(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw MissingFileError("missing detections file: " + path);
    std::ifstream is(path);
    if (!is) throw MissingFileError("cannot open: " + path);
    return read_detections(is, path);
}

inline void write_detections(std::ostream& os,
                             const std::vector<DetectionRecord>& records) {
    for (const auto& r : records) os << to_jsonl(r) << "\n";
}

inline void write_detections(const std::string& path,
                             const std::vector<DetectionRecord>& records) {
    std::ofstream os(path);
    if (!os) throw MissingFileError("cannot open for writing: " + path);
    write_detections(os, records);
    os.flush();
    if (!os) throw InvalidInputError("write failed: " + path);
}

// Poses JSONL starts with a header line {"skeleton":J,"version":1}; rows
// carry flat keypoint triples [x1,y1,s1,...].
inline std::string pose_header_line(int joints) {
    return "{\"skeleton\":" + std::to_string(joints) + ",\"version\":1}";
}

inline std::string to_jsonl(const PoseRecord& r) {
    std::string out = "{\"frame\":" + std::to_string(r.frame);
    out += ",\"keypoints\":[";
    for (size_t j = 0; j < r.pose.keypoints.size(); ++j) {
        const auto& k = r.pose.keypoints[j];
        if (j) out += ",";
        out += detail::fmt_fixed(k.x) + "," + detail::fmt_fixed(k.y) + "," +
               detail::fmt_fixed(k.score);
    }
    out += "],\"score\":" + detail::fmt_fixed(r.pose.score);
    if (r.pose.track_id) out += ",\"track_id\":" + std::to_string(*r.pose.track_id);
    if (r.video) out += ",\"video\":" + detail::json_string(*r.video);
    out += "}";
    return out;
}

struct PoseFile {
    int skeleton = 0;
    std::vector<PoseRecord> records;
};

inline PoseFile read_poses(std::istream& is, const std::string& path) {
    PoseFile out;
    std::string line;
    size_t lineno = 0;

    // header
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty()) break;
    }
    if (line.empty()) return out; // empty file: no header, no records
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw detail::line_error(path, lineno, std::string("bad JSON: ") + e.what());
    }
    if (!header.is_object() || !header.contains("skeleton"))
        throw detail::line_error(path, lineno,
                                 "first line must be a {\"skeleton\":J} header");
    out.skeleton = static_cast<int>(detail::get_int(header, "skeleton", path, lineno));
    require(out.skeleton >= 1, path + ": skeleton joint count must be >= 1");
    if (header.contains("version")) {
        const auto v = detail::get_int(header, "version", path, lineno);
        if (v != 1)
            throw detail::line_error(path, lineno,
                                     "unsupported poses schema version " +
                                         std::to_string(v));
    }

    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw detail::line_error(path, lineno, std::string("bad JSON: ") + e.what());
        }
        if (!obj.is_object())
            throw detail::line_error(path, lineno, "expected a JSON object");

        PoseRecord r;
        r.frame = detail::get_int(obj, "frame", path, lineno);
        r.pose.frame = r.frame;
        r.pose.score = detail::get_number(obj, "score", path, lineno);
        if (r.pose.score < 0.0 || r.pose.score > 1.0)
            throw detail::line_error(path, lineno, "score must be in [0, 1]");
        if (obj.contains("track_id"))
            r.pose.track_id = detail::get_int(obj, "track_id", path, lineno);
        if (obj.contains("video")) {
            if (!obj["video"].is_string())
                throw detail::line_error(path, lineno, "field 'video' must be a string");
            r.video = obj["video"].get<std::string>();
        }
        const auto it = obj.find("keypoints");
        if (it == obj.end())
            throw detail::line_error(path, lineno, "missing field 'keypoints'");
        if (!it->is_array() || it->size() % 3 != 0)
            throw detail::line_error(path, lineno,
                                     "keypoints must be a flat [x,y,s,...] array");
        if (static_cast<int>(it->size() / 3) != out.skeleton)
            throw detail::line_error(
                path, lineno, "keypoint count does not match skeleton header");
        for (size_t j = 0; j < it->size(); j += 3) {
            const auto& xv = (*it)[j];
            const auto& yv = (*it)[j + 1];
            const auto& sv = (*it)[j + 2];
            if (!xv.is_number() || !yv.is_number() || !sv.is_number())
                throw detail::line_error(path, lineno, "keypoints must be numbers");
            Keypoint k;
            k.x = xv.get<double>();
            k.y = yv.get<double>();
            k.score = sv.get<double>();
            if (!std::isfinite(k.x) || !std::isfinite(k.y))
                throw detail::line_error(path, lineno, "keypoints must be finite");
            if (!(k.score >= 0.0 && k.score <= 1.0))
                throw detail::line_error(path, lineno,
                                         "keypoint scores must be in [0, 1]");
            r.pose.keypoints.push_back(k);
        }
        out.records.push_back(std::move(r));
    }
    return out;
}

inline PoseFile read_poses(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw MissingFileError("missing poses file: " + path);
    std::ifstream is(path);
    if (!is) throw MissingFileError("cannot open: " + path);
    return read_poses(is, path);
}

inline void write_poses(std::ostream& os, int skeleton,
                        const std::vector<PoseRecord>& records) {
    os << pose_header_line(skeleton) << "\n";
    for (const auto& r : records) {
        require(r.pose.joints() == skeleton,
                "pose record does not match skeleton joint count");
        os << to_jsonl(r) << "\n";
    }
}

inline void write_poses(const std::string& path, int skeleton,
                        const std::vector<PoseRecord>& records) {
    std::ofstream os(path);
    if (!os) throw MissingFileError("cannot open for writing: " + path);
    write_poses(os, skeleton, records);
    os.flush();
    if (!os) throw InvalidInputError("write failed: " + path);
}

// Groups records by frame index over [0, max_frame]; records keep file order
// within a frame.
template <typename Record>
std::vector<std::vector<Record>> group_by_frame(const std::vector<Record>& records) {
    std::int64_t max_frame = -1;
    for (const auto& r : records) {
        require(r.frame >= 0, "negative frame index");
        max_frame = std::max(max_frame, r.frame);
    }
    std::vector<std::vector<Record>> out(static_cast<size_t>(max_frame + 1));
    for (const auto& r : records) out[static_cast<size_t>(r.frame)].push_back(r);
    return out;
}

} // namespace posekit
