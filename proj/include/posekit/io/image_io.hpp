#pragma once

#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "posekit/error.hpp"
#include "posekit/image.hpp"

namespace posekit {

namespace detail {

// Reads one whitespace-delimited PNM header token, skipping '#' comments.
inline std::string pnm_token(std::istream& is, const std::string& path) {
    std::string tok;
    int c;
    while ((c = is.get()) != EOF) {
        if (c == '#') {
            while ((c = is.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw InvalidInputError(path + ": truncated PNM header");
    return tok;
}

inline int pnm_int(std::istream& is, const std::string& path) {
    const std::string tok = pnm_token(is, path);
    try {
        return std::stoi(tok);
    } catch (const std::exception&) {
        throw InvalidInputError(path + ": bad PNM header token '" + tok + "'");
    }
}

} // namespace detail

// 8-bit binary PGM (P5).
inline GrayImage read_pgm(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw MissingFileError("missing frame image: " + path);
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFileError("cannot open: " + path);

    const std::string magic = detail::pnm_token(is, path);
    if (magic != "P5")
        throw InvalidInputError(path + ": expected P5 PGM, got '" + magic + "'");
    const int w = detail::pnm_int(is, path);
    const int h = detail::pnm_int(is, path);
    const int maxval = detail::pnm_int(is, path);
    require(w >= 1 && h >= 1, path + ": bad PGM dimensions");
    require(maxval == 255, path + ": only maxval 255 is supported");

    std::vector<std::uint8_t> raw(static_cast<size_t>(w) * h);
    is.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (!is) throw InvalidInputError(path + ": truncated PGM data");

    GrayImage img(h, w);
    for (size_t i = 0; i < raw.size(); ++i)
        img.values[i] = static_cast<float>(raw[i]) / 255.f;
    return img;
}

inline void write_pgm(const std::string& path, const GrayImage& img) {
    require_valid_image(img);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw MissingFileError("cannot open for writing: " + path);
    os << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<std::uint8_t> raw(img.values.size());
    for (size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<std::uint8_t>(
            std::lround(std::clamp(img.values[i], 0.f, 1.f) * 255.f));
    os.write(reinterpret_cast<const char*>(raw.data()),
             static_cast<std::streamsize>(raw.size()));
    if (!os) throw InvalidInputError("write failed: " + path);
}

// 8-bit binary PPM (P6).
inline RgbImage read_ppm(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw MissingFileError("missing frame image: " + path);
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFileError("cannot open: " + path);

    const std::string magic = detail::pnm_token(is, path);
    if (magic != "P6")
        throw InvalidInputError(path + ": expected P6 PPM, got '" + magic + "'");
    const int w = detail::pnm_int(is, path);
    const int h = detail::pnm_int(is, path);
    const int maxval = detail::pnm_int(is, path);
    require(w >= 1 && h >= 1, path + ": bad PPM dimensions");
    require(maxval == 255, path + ": only maxval 255 is supported");

    RgbImage img(h, w);
    is.read(reinterpret_cast<char*>(img.values.data()),
            static_cast<std::streamsize>(img.values.size()));
    if (!is) throw InvalidInputError(path + ": truncated PPM data");
    return img;
}

inline void write_ppm(const std::string& path, const RgbImage& img) {
    require(img.height >= 1 && img.width >= 1, "empty image");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw MissingFileError("cannot open for writing: " + path);
    os << "P6\n" << img.width << " " << img.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.values.data()),
             static_cast<std::streamsize>(img.values.size()));
    if (!os) throw InvalidInputError("write failed: " + path);
}

// Raw float frames: magic "GRY1" | u32 height | u32 width | H*W f32 in [0,1].
inline GrayImage read_gray_raw(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw MissingFileError("missing frame image: " + path);
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFileError("cannot open: " + path);

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GRY1", 4) != 0)
        throw InvalidInputError(path + ": not a GRY1 file (bad magic)");
    std::uint32_t h = 0, w = 0;
    is.read(reinterpret_cast<char*>(&h), 4);
    is.read(reinterpret_cast<char*>(&w), 4);
    if (!is) throw InvalidInputError(path + ": truncated GRY1 header");
    require(h >= 1 && w >= 1, path + ": bad GRY1 dimensions");

    GrayImage img(static_cast<int>(h), static_cast<int>(w));
    is.read(reinterpret_cast<char*>(img.values.data()),
            static_cast<std::streamsize>(img.values.size() * sizeof(float)));
    if (!is) throw InvalidInputError(path + ": truncated GRY1 data");
    for (float v : img.values)
        require(std::isfinite(v) && v >= 0.f && v <= 1.f,
                path + ": GRY1 values must be in [0, 1]");
    return img;
}

inline void write_gray_raw(const std::string& path, const GrayImage& img) {
    require_valid_image(img);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw MissingFileError("cannot open for writing: " + path);
    os.write("GRY1", 4);
    const auto h = static_cast<std::uint32_t>(img.height);
    const auto w = static_cast<std::uint32_t>(img.width);
    os.write(reinterpret_cast<const char*>(&h), 4);
    os.write(reinterpret_cast<const char*>(&w), 4);
    os.write(reinterpret_cast<const char*>(img.values.data()),
             static_cast<std::streamsize>(img.values.size() * sizeof(float)));
    if (!os) throw InvalidInputError("write failed: " + path);
}

// Loads a frame image by extension: .pgm, .ppm (converted to gray) or .gry.
inline GrayImage read_frame(const std::string& path) {
    const auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".pgm") return read_pgm(path);
    if (ext == ".ppm") return to_gray(read_ppm(path));
    if (ext == ".gry") return read_gray_raw(path);
    throw InvalidInputError("unsupported frame format: " + path);
}

} // namespace posekit
