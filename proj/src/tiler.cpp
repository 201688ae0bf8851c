#include "cfdiff/tiler.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cfdiff {

namespace {

// Symmetric reflection folded into [0, n); valid for any index.
int reflect_fold(int i, int n) {
    if (n == 1) return 0;
    int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

}  // namespace

std::pair<std::vector<Image>, TileLayout> split_patches(const Image& image, int patch) {
    if (patch < 1) throw std::invalid_argument("split_patches: patch must be >= 1");

    TileLayout layout;
    layout.height = image.height;
    layout.width = image.width;
    layout.patch = patch;
    layout.rows = (image.height + patch - 1) / patch;
    layout.cols = (image.width + patch - 1) / patch;
    layout.pad_bottom = layout.rows * patch - image.height;
    layout.pad_right = layout.cols * patch - image.width;

    std::vector<Image> patches;
    patches.reserve(static_cast<size_t>(layout.rows) * layout.cols);
    for (int r = 0; r < layout.rows; ++r)
        for (int c = 0; c < layout.cols; ++c) {
            Image p(patch, patch, image.channels);
            for (int y = 0; y < patch; ++y) {
                int sy = reflect_fold(r * patch + y, image.height);
                for (int x = 0; x < patch; ++x) {
                    int sx = reflect_fold(c * patch + x, image.width);
                    for (int ch = 0; ch < image.channels; ++ch)
                        p.at(y, x, ch) = image.at(sy, sx, ch);
                }
            }
            patches.push_back(std::move(p));
        }
    return {std::move(patches), layout};
}

Image merge_patches(const std::vector<Image>& patches, const TileLayout& layout) {
    size_t expected = static_cast<size_t>(layout.rows) * layout.cols;
    if (patches.size() != expected)
        throw std::invalid_argument("merge_patches: expected " + std::to_string(expected) +
                                    " patches, got " + std::to_string(patches.size()));
    int channels = patches.front().channels;
    for (const auto& p : patches)
        if (p.height != layout.patch || p.width != layout.patch || p.channels != channels)
            throw std::invalid_argument("merge_patches: patch shape does not match layout");

    Image out(layout.height, layout.width, channels);
    for (int r = 0; r < layout.rows; ++r)
        for (int c = 0; c < layout.cols; ++c) {
            const Image& p = patches[static_cast<size_t>(r) * layout.cols + c];
            int y_end = std::min(layout.patch, layout.height - r * layout.patch);
            int x_end = std::min(layout.patch, layout.width - c * layout.patch);
            for (int y = 0; y < y_end; ++y)
                for (int x = 0; x < x_end; ++x)
                    for (int ch = 0; ch < channels; ++ch)
                        out.at(r * layout.patch + y, c * layout.patch + x, ch) = p.at(y, x, ch);
        }
    return out;
}

}  // namespace cfdiff
