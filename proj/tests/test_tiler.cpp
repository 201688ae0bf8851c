#include <doctest.h>

#include "cfdiff/rng.hpp"
#include "cfdiff/tiler.hpp"

using namespace cfdiff;

TEST_CASE("exact multiple produces an unpadded grid") {
    GaussianRng rng(1);
    Image x = rng.gaussian_image(64, 96, 3);
    auto [patches, layout] = split_patches(x, 32);
    CHECK(layout.rows == 2);
    CHECK(layout.cols == 3);
    CHECK(layout.pad_bottom == 0);
    CHECK(layout.pad_right == 0);
    CHECK(patches.size() == 6);
    for (const Image& p : patches) {
        CHECK(p.height == 32);
        CHECK(p.width == 32);
    }
    // top-left patch is a plain crop
    for (int y = 0; y < 32; ++y)
        for (int xx = 0; xx < 32; ++xx)
            for (int c = 0; c < 3; ++c) CHECK(patches[0].at(y, xx, c) == x.at(y, xx, c));
    Image back = merge_patches(patches, layout);
    CHECK(back.data == x.data);
}

TEST_CASE("padding uses reflection") {
    Image x(3, 3, 1);
    for (int i = 0; i < 9; ++i) x.data[i] = i;
    auto [patches, layout] = split_patches(x, 4);
    REQUIRE(patches.size() == 1);
    CHECK(layout.pad_bottom == 1);
    CHECK(layout.pad_right == 1);
    // reflected row/col: index 3 mirrors index 2
    CHECK(patches[0].at(3, 0, 0) == x.at(2, 0, 0));
    CHECK(patches[0].at(0, 3, 0) == x.at(0, 2, 0));
    CHECK(patches[0].at(3, 3, 0) == x.at(2, 2, 0));
    Image back = merge_patches(patches, layout);
    CHECK(back.data == x.data);
}

TEST_CASE("round trip over many shapes") {
    GaussianRng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        int h = 1 + static_cast<int>(rng.next_u64() % 600);
        int w = 1 + static_cast<int>(rng.next_u64() % 600);
        int c = trial % 2 == 0 ? 1 : 3;
        int patch = 8 << (trial % 4);  // 8..64
        Image x = rng.gaussian_image(h, w, c);
        auto [patches, layout] = split_patches(x, patch);
        CHECK(static_cast<int>(patches.size()) == layout.rows * layout.cols);
        Image back = merge_patches(patches, layout);
        REQUIRE(back.same_shape(x));
        CHECK(back.data == x.data);
    }
}

TEST_CASE("merge validates the patch list") {
    GaussianRng rng(2);
    Image x = rng.gaussian_image(40, 40, 1);
    auto [patches, layout] = split_patches(x, 32);
    patches.pop_back();
    CHECK_THROWS(merge_patches(patches, layout));
}

TEST_CASE("bad patch size rejected") {
    Image x(8, 8, 1, 0.0);
    CHECK_THROWS(split_patches(x, 0));
    CHECK_THROWS(split_patches(x, -3));
}
