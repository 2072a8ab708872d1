#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "posekit/error.hpp"

namespace posekit {

// Single-channel frame with values in [0, 1].
struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<float> values; // [y][x]

    GrayImage() = default;
    GrayImage(int h, int w, float fill = 0.f)
        : height(h), width(w), values(static_cast<size_t>(h) * w, fill) {}

    float& at(int y, int x) { return values[static_cast<size_t>(y) * width + x]; }
    float at(int y, int x) const {
        return values[static_cast<size_t>(y) * width + x];
    }
};

inline void require_valid_image(const GrayImage& img) {
    require(img.height >= 1 && img.width >= 1, "image must be at least 1x1");
    require(img.values.size() == static_cast<size_t>(img.height) * img.width,
            "image buffer does not match dims");
    for (float v : img.values)
        require(std::isfinite(v) && v >= 0.f && v <= 1.f,
                "image values must be finite and in [0, 1]");
}

// RGB interleaved 8-bit image, used for overlays.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values; // [y][x][rgb]

    RgbImage() = default;
    RgbImage(int h, int w)
        : height(h), width(w), values(static_cast<size_t>(h) * w * 3, 0) {}

    std::uint8_t* px(int y, int x) {
        return &values[(static_cast<size_t>(y) * width + x) * 3];
    }
    const std::uint8_t* px(int y, int x) const {
        return &values[(static_cast<size_t>(y) * width + x) * 3];
    }
};

inline GrayImage to_gray(const RgbImage& img) {
    GrayImage g(img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const std::uint8_t* p = img.px(y, x);
            // luma weights, one declared convention
            const double v = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
            g.at(y, x) = static_cast<float>(v);
        }
    }
    return g;
}

inline RgbImage to_rgb(const GrayImage& img) {
    RgbImage rgb(img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const auto v = static_cast<std::uint8_t>(
                std::lround(std::clamp(img.at(y, x), 0.f, 1.f) * 255.f));
            std::uint8_t* p = rgb.px(y, x);
            p[0] = p[1] = p[2] = v;
        }
    }
    return rgb;
}

} // namespace posekit
