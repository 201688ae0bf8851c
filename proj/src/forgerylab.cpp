#include "cfdiff/forgerylab.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cfdiff/dct.hpp"
#include "cfdiff/rng.hpp"

namespace cfdiff {

namespace {

int reflect(int i, int n) {
    if (i < 0) return -i - 1;
    if (i >= n) return 2 * n - 1 - i;
    return i;
}

// Bilinearly interpolated random grid, amplitude in [-amp, amp].
void add_value_noise(std::vector<double>& plane, int size, int cell, double amp,
                     GaussianRng& rng) {
    int gw = size / cell + 2;
    std::vector<double> grid(static_cast<size_t>(gw) * gw);
    for (double& v : grid) v = (2.0 * rng.uniform() - 1.0) * amp;
    for (int y = 0; y < size; ++y) {
        double fy = static_cast<double>(y) / cell;
        int gy = static_cast<int>(fy);
        double ty = fy - gy;
        for (int x = 0; x < size; ++x) {
            double fx = static_cast<double>(x) / cell;
            int gx = static_cast<int>(fx);
            double tx = fx - gx;
            double v00 = grid[static_cast<size_t>(gy) * gw + gx];
            double v01 = grid[static_cast<size_t>(gy) * gw + gx + 1];
            double v10 = grid[static_cast<size_t>(gy + 1) * gw + gx];
            double v11 = grid[static_cast<size_t>(gy + 1) * gw + gx + 1];
            double v = (1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11);
            plane[static_cast<size_t>(y) * size + x] += v;
        }
    }
}

std::vector<double> texture_plane(int size, GaussianRng& rng, double scale) {
    std::vector<double> p(static_cast<size_t>(size) * size, 0.0);
    add_value_noise(p, size, 64, 0.50 * scale, rng);
    add_value_noise(p, size, 32, 0.25 * scale, rng);
    add_value_noise(p, size, 16, 0.15 * scale, rng);
    add_value_noise(p, size, 8, 0.10 * scale, rng);
    return p;
}

// RGGB pattern: channel sampled at pixel (y, x) under the given phase.
int bayer_channel(int y, int x, int phase) {
    int py = phase >> 1, px = phase & 1;
    int yy = (y + py) & 1, xx = (x + px) & 1;
    if (yy == 0 && xx == 0) return 0;  // R
    if (yy == 1 && xx == 1) return 2;  // B
    return 1;                          // G
}

// Mosaic (with sensor noise added in the mosaic domain, as a real sensor
// would) then channel-wise bilinear demosaic, in place. Interpolated sites
// inherit averaged, hence weaker, noise -- the trace detect_variance reads.
void bayer_resample(Image& img, int phase, double noise_std, GaussianRng& rng) {
    int n = img.height;
    Image mosaic(n, n, 1);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) mosaic.at(y, x, 0) = img.at(y, x, bayer_channel(y, x, phase));
    if (noise_std > 0.0)
        for (double& v : mosaic.data) v += noise_std * rng.gaussian();

    for (int c = 0; c < 3; ++c) {
        // known-sample mask for this channel
        auto known = [&](int y, int x) { return bayer_channel(y, x, phase) == c; };
        if (c == 1) {
            // green: checkerboard; unknowns take the 4-neighbor average
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x) {
                    if (known(y, x)) {
                        img.at(y, x, 1) = mosaic.at(y, x, 0);
                    } else {
                        double acc = 0.0;
                        acc += mosaic.at(reflect(y - 1, n), x, 0);
                        acc += mosaic.at(reflect(y + 1, n), x, 0);
                        acc += mosaic.at(y, reflect(x - 1, n), 0);
                        acc += mosaic.at(y, reflect(x + 1, n), 0);
                        img.at(y, x, 1) = acc * 0.25;
                    }
                }
        } else {
            // red/blue: sampled on a stride-2 lattice; horizontal then
            // vertical linear interpolation
            std::vector<double> tmp(static_cast<size_t>(n) * n, 0.0);
            std::vector<char> row_has(n, 0);
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    if (known(y, x)) {
                        tmp[static_cast<size_t>(y) * n + x] = mosaic.at(y, x, 0);
                        row_has[y] = 1;
                    }
            for (int y = 0; y < n; ++y) {
                if (!row_has[y]) continue;
                for (int x = 0; x < n; ++x)
                    if (!known(y, x)) {
                        bool has_l = x - 1 >= 0 && known(y, x - 1);
                        bool has_r = x + 1 < n && known(y, x + 1);
                        double l = has_l ? tmp[static_cast<size_t>(y) * n + x - 1] : 0.0;
                        double r = has_r ? tmp[static_cast<size_t>(y) * n + x + 1] : 0.0;
                        tmp[static_cast<size_t>(y) * n + x] =
                            has_l && has_r ? 0.5 * (l + r) : (has_l ? l : r);
                    }
            }
            for (int y = 0; y < n; ++y) {
                if (row_has[y]) continue;
                bool has_u = y - 1 >= 0 && row_has[y - 1];
                bool has_d = y + 1 < n && row_has[y + 1];
                for (int x = 0; x < n; ++x) {
                    double u = has_u ? tmp[static_cast<size_t>(y - 1) * n + x] : 0.0;
                    double d = has_d ? tmp[static_cast<size_t>(y + 1) * n + x] : 0.0;
                    tmp[static_cast<size_t>(y) * n + x] =
                        has_u && has_d ? 0.5 * (u + d) : (has_u ? u : d);
                }
            }
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x) img.at(y, x, c) = tmp[static_cast<size_t>(y) * n + x];
        }
    }
}

}  // namespace

Image synth_clean(uint64_t seed, int size, const PipelineParams& params) {
    if (size < 64) throw std::invalid_argument("synth_clean: size must be >= 64");
    if (!(params.quality > 0.0 && params.quality <= 1.0))
        throw std::invalid_argument("synth_clean: quality must be in (0, 1]");
    if (params.noise_std < 0.0) throw std::invalid_argument("synth_clean: noise_std must be >= 0");
    if (params.bayer_phase < 0 || params.bayer_phase > 3)
        throw std::invalid_argument("synth_clean: bayer_phase must be in [0, 3]");

    GaussianRng rng(mix64(seed ^ mix64(params.texture_seed ^ 0x74657874ULL)));

    // smooth multi-scale texture: shared luma plus mild per-channel chroma
    auto luma = texture_plane(size, rng, 0.8);
    Image img(size, size, 3);
    for (int c = 0; c < 3; ++c) {
        auto chroma = texture_plane(size, rng, 0.25);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                double v = luma[static_cast<size_t>(y) * size + x] +
                           chroma[static_cast<size_t>(y) * size + x];
                img.at(y, x, c) = v < -0.95 ? -0.95 : (v > 0.95 ? 0.95 : v);
            }
    }

    bayer_resample(img, params.bayer_phase, params.noise_std, rng);

    if (params.quantize) quantize_blocks(img, params.quality, 0, 0);

    return clamp_unit(std::move(img));
}

std::pair<Image, Mask> make_forgery(const Image& target, const Image& donor,
                                    const ForgerySpec& spec, uint64_t /*seed*/) {
    Image forged = target;
    Mask mask(target.height, target.width, 0);

    auto copy_pixel = [&](int dy, int dx) {
        int ty = dy + spec.offset_y, tx = dx + spec.offset_x;
        if (dy < 0 || dy >= donor.height || dx < 0 || dx >= donor.width || ty < 0 ||
            ty >= target.height || tx < 0 || tx >= target.width)
            throw std::out_of_range("make_forgery: region outside image bounds");
        for (int c = 0; c < target.channels; ++c) forged.at(ty, tx, c) = donor.at(dy, dx, c);
        mask.at(ty, tx) = 1;
    };

    if (spec.kind == RegionKind::Rectangle) {
        for (int dy = spec.y; dy < spec.y + spec.h; ++dy)
            for (int dx = spec.x; dx < spec.x + spec.w; ++dx) copy_pixel(dy, dx);
    } else {
        for (int dy = spec.cy - spec.r; dy <= spec.cy + spec.r; ++dy)
            for (int dx = spec.cx - spec.r; dx <= spec.cx + spec.r; ++dx) {
                long long ry = dy - spec.cy, rx = dx - spec.cx;
                if (ry * ry + rx * rx <= static_cast<long long>(spec.r) * spec.r)
                    copy_pixel(dy, dx);
            }
    }
    return {std::move(forged), std::move(mask)};
}

std::vector<ForgeryCase> generate_dataset(const DatasetRecipe& recipe) {
    if (recipe.count < 1 || recipe.size < 64 || recipe.region_size < 8 ||
        recipe.region_size > recipe.size)
        throw std::invalid_argument("generate_dataset: invalid recipe");

    std::vector<ForgeryCase> cases;
    cases.reserve(recipe.count);
    for (int i = 0; i < recipe.count; ++i) {
        ForgeryCase fc;
        fc.clean_seed = mix64(recipe.seed ^ (0x636c65616eULL + 2 * i));
        fc.donor_seed = mix64(recipe.seed ^ (0x646f6e6f72ULL + 2 * i + 1));
        fc.clean = synth_clean(fc.clean_seed, recipe.size, recipe.target_params);
        Image donor = synth_clean(fc.donor_seed, recipe.size, recipe.donor_params);

        GaussianRng rng(mix64(recipe.seed ^ (0x706c616365ULL + i)));
        int margin = recipe.size - recipe.region_size;
        int ty = static_cast<int>(rng.next_u64() % (margin + 1));
        int tx = static_cast<int>(rng.next_u64() % (margin + 1));
        // donor source chosen so the paste offset misaligns the DCT grid
        int off = recipe.grid_offset;
        int sy = ty >= off ? ty - off : ty + off;
        int sx = tx >= off ? tx - off : tx + off;

        fc.spec.kind = RegionKind::Rectangle;
        fc.spec.x = sx;
        fc.spec.y = sy;
        fc.spec.w = recipe.region_size;
        fc.spec.h = recipe.region_size;
        fc.spec.offset_y = ty - sy;
        fc.spec.offset_x = tx - sx;

        auto [forged, mask] = make_forgery(fc.clean, donor, fc.spec, recipe.seed);
        fc.forged = std::move(forged);
        fc.mask = std::move(mask);
        cases.push_back(std::move(fc));
    }
    return cases;
}

}  // namespace cfdiff
