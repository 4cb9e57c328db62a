#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ashe/errors.hpp"

namespace ashe {

// Interleaved 8-bit RGB raster.
struct Image {
    int w = 0;
    int h = 0;
    std::vector<uint8_t> px;  // w * h * 3, row-major, RGB

    Image() = default;
    Image(int width, int height, uint8_t r = 0, uint8_t g = 0, uint8_t b = 0);

    uint8_t* at(int x, int y) { return &px[(static_cast<size_t>(y) * w + x) * 3]; }
    const uint8_t* at(int x, int y) const {
        return &px[(static_cast<size_t>(y) * w + x) * 3];
    }
    bool inside(int x, int y) const { return x >= 0 && x < w && y >= 0 && y < h; }
};

// Single 8-bit plane.
struct GrayImage {
    int w = 0;
    int h = 0;
    std::vector<uint8_t> px;

    GrayImage() = default;
    GrayImage(int width, int height, uint8_t fill = 0)
        : w(width), h(height), px(static_cast<size_t>(width) * height, fill) {}

    uint8_t& at(int x, int y) { return px[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int x, int y) const { return px[static_cast<size_t>(y) * w + x]; }
    bool inside(int x, int y) const { return x >= 0 && x < w && y >= 0 && y < h; }
};

// Binary raster (masks, edge maps). Set pixels are 255, clear pixels 0.
struct Bitmap {
    int w = 0;
    int h = 0;
    std::vector<uint8_t> px;

    Bitmap() = default;
    Bitmap(int width, int height, uint8_t fill = 0)
        : w(width), h(height), px(static_cast<size_t>(width) * height, fill) {}

    uint8_t& at(int x, int y) { return px[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int x, int y) const { return px[static_cast<size_t>(y) * w + x]; }
    bool inside(int x, int y) const { return x >= 0 && x < w && y >= 0 && y < h; }
    size_t count() const;
};

Image crop(const Image& img, int x, int y, int w, int h);

// Binary PPM (P6) / PGM (P5), maxval 255 only.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img);
GrayImage read_pgm(const std::string& path);

}  // namespace ashe
