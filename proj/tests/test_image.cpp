#include <doctest.h>

#include "support.hpp"
#include "weeesort/errors.hpp"
#include "weeesort/image.hpp"

using namespace weeesort;

namespace {

Image gradient_image(int h, int w) {
    Image img(h, w, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(y, x, 0) = static_cast<std::uint8_t>((x * 7 + y * 3) % 256);
            img.at(y, x, 1) = static_cast<std::uint8_t>((x * 5 + y * 11) % 256);
            img.at(y, x, 2) = static_cast<std::uint8_t>((x + y) % 256);
        }
    }
    return img;
}

}  // namespace

TEST_CASE("png round trip preserves pixels") {
    testing::TempDir dir("png");
    const Image img = gradient_image(33, 47);
    save_png(dir.path() / "t.png", img);
    const Image back = load_png(dir.path() / "t.png");
    REQUIRE(back.same_shape(img));
    CHECK(back.data == img.data);
}

TEST_CASE("load_png reports missing files") {
    CHECK_THROWS_AS(load_png("/nonexistent/never.png"), IoError);
}

TEST_CASE("resize to the same size is the identity") {
    const Image img = gradient_image(64, 64);
    const Image out = resize_bilinear(img, 64, 64);
    CHECK(out.data == img.data);
}

TEST_CASE("resize of a constant image stays constant") {
    Image img(40, 60, 3);
    std::fill(img.data.begin(), img.data.end(), 77);
    const Image out = resize_bilinear(img, 500, 500);
    CHECK(out.height == 500);
    CHECK(out.width == 500);
    for (std::uint8_t v : out.data) {
        REQUIRE(v == 77);
    }
}

TEST_CASE("crop bounds are enforced") {
    const Image img = gradient_image(20, 20);
    CHECK_THROWS_AS(crop(img, 15, 15, 10, 10), ArgumentError);
    const Image c = crop(img, 2, 3, 5, 4);
    CHECK(c.width == 5);
    CHECK(c.height == 4);
    CHECK(c.at(0, 0, 1) == img.at(3, 2, 1));
}

TEST_CASE("pad_replicate copies border rows and columns") {
    const Image img = gradient_image(8, 8);
    const Image padded = pad_replicate(img, 3, 0, 2, 1);
    CHECK(padded.width == 11);
    CHECK(padded.height == 11);
    for (int x = 0; x < 3; ++x) {
        for (int c = 0; c < 3; ++c) {
            CHECK(padded.at(5, x, c) == img.at(3, 0, c));
        }
    }
    for (int y = 0; y < 2; ++y) {
        CHECK(padded.at(y, 6, 0) == img.at(0, 3, 0));
    }
    CHECK(padded.at(10, 4, 2) == img.at(7, 1, 2));
}

TEST_CASE("flips are exact involutions") {
    Image img = gradient_image(31, 17);
    const Image original = img;
    flip_horizontal(img);
    CHECK(img.data != original.data);
    flip_horizontal(img);
    CHECK(img.data == original.data);
    flip_vertical(img);
    flip_vertical(img);
    CHECK(img.data == original.data);
}

TEST_CASE("warp with the identity matrix returns the input") {
    const Image img = gradient_image(25, 25);
    const Image out = warp_affine_center(img, {1, 0, 0, 1});
    CHECK(out.data == img.data);
}

TEST_CASE("warp by 90 degrees maps the constant image to itself") {
    Image img(16, 16, 3);
    std::fill(img.data.begin(), img.data.end(), 200);
    const Image out = warp_affine_center(img, {0, -1, 1, 0});
    CHECK(out.data == img.data);
}
