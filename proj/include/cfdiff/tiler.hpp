#pragma once

#include <utility>
#include <vector>

#include "cfdiff/image.hpp"

namespace cfdiff {

struct TileLayout {
    int height = 0;   // original image size
    int width = 0;
    int patch = 0;
    int rows = 0;
    int cols = 0;
    int pad_bottom = 0;
    int pad_right = 0;
};

/// Pads the image by reflection to multiples of `patch` and cuts it into
/// non-overlapping patch x patch tiles, row-major.
std::pair<std::vector<Image>, TileLayout> split_patches(const Image& image, int patch);

/// Inverse of split_patches: reassembles the tiles and crops the padding.
/// merge(split(x)) == x bit-exact for untouched patches.
Image merge_patches(const std::vector<Image>& patches, const TileLayout& layout);

}  // namespace cfdiff
