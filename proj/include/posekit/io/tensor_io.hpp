#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "posekit/error.hpp"
#include "posekit/heatmap.hpp"

namespace posekit {

// Binary tensor container (".ht"):
//   magic "HTNS" | u8 version=1 | u8 rank | rank x u32 dims
//   | 6 x f64 affine transform (row-major 2x3) | f32 values, row-major
// All fields little-endian. Heatmaps are rank 3 [J, H, W]; rank 4 stacks
// [N, J, H, W] share one transform and are addressed by slice index.
namespace ht {
inline constexpr char kMagic[4] = {'H', 'T', 'N', 'S'};
inline constexpr std::uint8_t kVersion = 1;
} // namespace ht

namespace detail {

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const std::string& path) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw InvalidInputError(path + ": truncated tensor file");
    return v;
}

} // namespace detail

inline void write_heatmap(std::ostream& os, const Heatmap& h) {
    require_valid_heatmap(h);
    os.write(ht::kMagic, 4);
    detail::write_raw(os, ht::kVersion);
    detail::write_raw(os, static_cast<std::uint8_t>(3));
    detail::write_raw(os, static_cast<std::uint32_t>(h.joints));
    detail::write_raw(os, static_cast<std::uint32_t>(h.height));
    detail::write_raw(os, static_cast<std::uint32_t>(h.width));
    for (double v : h.transform.m) detail::write_raw(os, v);
    os.write(reinterpret_cast<const char*>(h.values.data()),
             static_cast<std::streamsize>(h.values.size() * sizeof(float)));
}

inline void write_heatmap(const std::string& path, const Heatmap& h) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw MissingFileError("cannot open for writing: " + path);
    write_heatmap(os, h);
    os.flush();
    if (!os) throw InvalidInputError("write failed: " + path);
}

inline Heatmap read_heatmap(std::istream& is, const std::string& path,
                            std::int64_t index = 0) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, ht::kMagic, 4) != 0)
        throw InvalidInputError(path + ": not a tensor file (bad magic)");
    const auto version = detail::read_raw<std::uint8_t>(is, path);
    if (version != ht::kVersion)
        throw InvalidInputError(path + ": unsupported tensor format version " +
                                std::to_string(version));
    const auto rank = detail::read_raw<std::uint8_t>(is, path);
    if (rank != 3 && rank != 4)
        throw InvalidInputError(path + ": expected rank 3 or 4, got " +
                                std::to_string(rank));
    std::vector<std::uint32_t> dims(rank);
    for (auto& d : dims) d = detail::read_raw<std::uint32_t>(is, path);

    AffineTransform t;
    for (double& v : t.m) v = detail::read_raw<double>(is, path);

    std::int64_t count = 1;
    int j, h, w;
    if (rank == 3) {
        require(index == 0, path + ": slice index into a rank-3 tensor");
        j = static_cast<int>(dims[0]);
        h = static_cast<int>(dims[1]);
        w = static_cast<int>(dims[2]);
    } else {
        count = dims[0];
        require(index >= 0 && index < count, path + ": slice index out of range");
        j = static_cast<int>(dims[1]);
        h = static_cast<int>(dims[2]);
        w = static_cast<int>(dims[3]);
    }

    Heatmap out(j, h, w, t);
    require_valid_heatmap(out);
    const auto slice_bytes =
        static_cast<std::streamoff>(out.values.size() * sizeof(float));
    if (index > 0) is.seekg(slice_bytes * index, std::ios::cur);
    is.read(reinterpret_cast<char*>(out.values.data()), slice_bytes);
    if (!is) throw InvalidInputError(path + ": truncated tensor file");
    for (float v : out.values)
        require(std::isfinite(v), path + ": non-finite tensor value");
    return out;
}

inline Heatmap read_heatmap(const std::string& path, std::int64_t index = 0) {
    if (!std::filesystem::exists(path))
        throw MissingFileError("missing tensor file: " + path);
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFileError("cannot open: " + path);
    return read_heatmap(is, path, index);
}

} // namespace posekit
