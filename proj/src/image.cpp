#include "ashe/image.hpp"

#include <cstdio>
#include <memory>

namespace ashe {

Image::Image(int width, int height, uint8_t r, uint8_t g, uint8_t b)
    : w(width), h(height), px(static_cast<size_t>(width) * height * 3) {
    require(width > 0 && height > 0, "Image: non-positive dimensions");
    for (size_t i = 0; i < px.size(); i += 3) {
        px[i] = r;
        px[i + 1] = g;
        px[i + 2] = b;
    }
}

size_t Bitmap::count() const {
    size_t n = 0;
    for (uint8_t v : px) n += v != 0;
    return n;
}

Image crop(const Image& img, int x, int y, int w, int h) {
    require(w > 0 && h > 0, "crop: non-positive size");
    if (x < 0 || y < 0 || x + w > img.w || y + h > img.h)
        throw DataError("crop: window outside image bounds");
    Image out(w, h);
    for (int row = 0; row < h; ++row) {
        const uint8_t* src = img.at(x, y + row);
        uint8_t* dst = out.at(0, row);
        std::copy(src, src + static_cast<size_t>(w) * 3, dst);
    }
    return out;
}

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

// Reads one whitespace-delimited token, skipping '#' comments to end of line.
bool next_token(FILE* f, std::string& tok) {
    tok.clear();
    int c = std::fgetc(f);
    for (;;) {
        while (c == ' ' || c == '\t' || c == '\r' || c == '\n') c = std::fgetc(f);
        if (c == '#') {
            while (c != '\n' && c != EOF) c = std::fgetc(f);
            continue;
        }
        break;
    }
    while (c != EOF && c != ' ' && c != '\t' && c != '\r' && c != '\n' && c != '#') {
        tok.push_back(static_cast<char>(c));
        c = std::fgetc(f);
    }
    if (c == '#') std::ungetc(c, f);
    return !tok.empty();
}

int parse_int(const std::string& tok, const char* what) {
    try {
        size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw DataError(std::string("bad integer in ") + what);
        return v;
    } catch (const DataError&) {
        throw;
    } catch (...) {
        throw DataError(std::string("bad integer in ") + what);
    }
}

void read_header(FILE* f, const char* magic, const std::string& path, int& w, int& h) {
    std::string tok;
    if (!next_token(f, tok) || tok != magic)
        throw DataError(path + ": expected " + magic + " header");
    if (!next_token(f, tok)) throw DataError(path + ": truncated header");
    w = parse_int(tok, path.c_str());
    if (!next_token(f, tok)) throw DataError(path + ": truncated header");
    h = parse_int(tok, path.c_str());
    if (!next_token(f, tok)) throw DataError(path + ": truncated header");
    const int maxval = parse_int(tok, path.c_str());
    if (w <= 0 || h <= 0) throw DataError(path + ": non-positive dimensions");
    if (maxval != 255) throw DataError(path + ": only maxval 255 is supported");
    // The single whitespace byte after maxval was already consumed by next_token.
}

}  // namespace

void write_ppm(const std::string& path, const Image& img) {
    require(img.w > 0 && img.h > 0, "write_ppm: empty image");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw DataError(path + ": cannot open for writing");
    std::fprintf(f.get(), "P6\n%d %d\n255\n", img.w, img.h);
    if (std::fwrite(img.px.data(), 1, img.px.size(), f.get()) != img.px.size())
        throw DataError(path + ": short write");
}

Image read_ppm(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw DataError(path + ": cannot open");
    int w = 0, h = 0;
    read_header(f.get(), "P6", path, w, h);
    Image img(w, h);
    if (std::fread(img.px.data(), 1, img.px.size(), f.get()) != img.px.size())
        throw DataError(path + ": truncated pixel data");
    return img;
}

void write_pgm(const std::string& path, const GrayImage& img) {
    require(img.w > 0 && img.h > 0, "write_pgm: empty image");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw DataError(path + ": cannot open for writing");
    std::fprintf(f.get(), "P5\n%d %d\n255\n", img.w, img.h);
    if (std::fwrite(img.px.data(), 1, img.px.size(), f.get()) != img.px.size())
        throw DataError(path + ": short write");
}

GrayImage read_pgm(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw DataError(path + ": cannot open");
    int w = 0, h = 0;
    read_header(f.get(), "P5", path, w, h);
    GrayImage img(w, h);
    if (std::fread(img.px.data(), 1, img.px.size(), f.get()) != img.px.size())
        throw DataError(path + ": truncated pixel data");
    return img;
}

}  // namespace ashe
