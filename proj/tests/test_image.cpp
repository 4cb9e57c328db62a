#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "ashe/errors.hpp"
#include "ashe/image.hpp"
#include "ashe/rng.hpp"
#include "doctest.h"

using namespace ashe;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const char* name) {
    return (fs::temp_directory_path() / name).string();
}

Image random_image(int w, int h, uint64_t seed) {
    Image img(w, h);
    Rng rng(seed);
    for (auto& v : img.px) v = static_cast<uint8_t>(rng.uniform_int(0, 255));
    return img;
}

}  // namespace

TEST_CASE("ppm round-trip is lossless") {
    const Image img = random_image(33, 17, 1);
    const std::string path = temp_path("ashe_test_rt.ppm");
    write_ppm(path, img);
    const Image back = read_ppm(path);
    CHECK(back.w == img.w);
    CHECK(back.h == img.h);
    CHECK(back.px == img.px);
    fs::remove(path);
}

TEST_CASE("pgm round-trip is lossless") {
    GrayImage img(21, 9);
    Rng rng(2);
    for (auto& v : img.px) v = static_cast<uint8_t>(rng.uniform_int(0, 255));
    const std::string path = temp_path("ashe_test_rt.pgm");
    write_pgm(path, img);
    const GrayImage back = read_pgm(path);
    CHECK(back.w == img.w);
    CHECK(back.h == img.h);
    CHECK(back.px == img.px);
    fs::remove(path);
}

TEST_CASE("ppm reader accepts header comments") {
    const std::string path = temp_path("ashe_test_comment.ppm");
    {
        std::ofstream f(path, std::ios::binary);
        f << "P6\n# a comment line\n2 1\n# another\n255\n";
        const unsigned char px[6] = {1, 2, 3, 250, 251, 252};
        f.write(reinterpret_cast<const char*>(px), 6);
    }
    const Image img = read_ppm(path);
    REQUIRE(img.w == 2);
    REQUIRE(img.h == 1);
    CHECK(img.at(0, 0)[0] == 1);
    CHECK(img.at(1, 0)[2] == 252);
    fs::remove(path);
}

TEST_CASE("ppm reader rejects malformed input") {
    const std::string path = temp_path("ashe_test_bad.ppm");
    {
        std::ofstream f(path, std::ios::binary);
        f << "P5\n2 1\n255\n";
        f.write("abcdef", 6);
    }
    CHECK_THROWS_AS(read_ppm(path), DataError);
    {
        std::ofstream f(path, std::ios::binary);
        f << "P6\n4 4\n255\n";
        f.write("xy", 2);  // truncated pixel data
    }
    CHECK_THROWS_AS(read_ppm(path), DataError);
    CHECK_THROWS_AS(read_ppm(temp_path("ashe_test_missing.ppm")), DataError);
    fs::remove(path);
}

TEST_CASE("crop extracts the window and checks bounds") {
    const Image img = random_image(10, 8, 3);
    const Image c = crop(img, 2, 3, 4, 5);
    REQUIRE(c.w == 4);
    REQUIRE(c.h == 5);
    for (int y = 0; y < c.h; ++y)
        for (int x = 0; x < c.w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                CHECK(c.at(x, y)[ch] == img.at(x + 2, y + 3)[ch]);

    CHECK_THROWS_AS(crop(img, -1, 0, 4, 4), DataError);
    CHECK_THROWS_AS(crop(img, 8, 0, 4, 4), DataError);
    CHECK_THROWS_AS(crop(img, 0, 6, 4, 4), DataError);
    CHECK_THROWS_AS(crop(img, 0, 0, 0, 4), ContractError);
}

TEST_CASE("bitmap count tallies set pixels") {
    Bitmap bm(5, 4);
    CHECK(bm.count() == 0);
    bm.at(1, 1) = 255;
    bm.at(4, 3) = 255;
    CHECK(bm.count() == 2);
}
