#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cfdiff/image.hpp"
#include "cfdiff/metrics.hpp"

namespace cfdiff {

/// Camera-pipeline simulation parameters. The traces these leave (Bayer
/// phase, 8x8 quantization grid, sensor noise level) are exactly the ones the
/// forensics detectors look for.
struct PipelineParams {
    int bayer_phase = 0;      // 0..3: (row,col) offset of the RGGB pattern
    bool quantize = true;     // 8x8 block-DCT quantization, grid anchored at (0,0)
    double quality = 0.2;     // in (0,1]; quantizer step = 1/quality in 8-bit units
    double noise_std = 0.02;  // additive Gaussian sensor noise, model units
    uint64_t texture_seed = 0;
};

enum class RegionKind { Rectangle, Disk };

/// Donor region geometry plus where it lands in the target. The donor is
/// rendered with deliberately inconsistent pipeline parameters; a paste
/// offset that is nonzero mod 8 misaligns the donor's quantization grid.
struct ForgerySpec {
    RegionKind kind = RegionKind::Rectangle;
    int x = 0, y = 0;          // rectangle top-left (donor coords)
    int w = 0, h = 0;          // rectangle size
    int cx = 0, cy = 0, r = 0; // disk center/radius (donor coords)
    int offset_y = 0, offset_x = 0;  // donor -> target translation
};

/// Procedural texture -> Bayer mosaic -> bilinear demosaic -> optional
/// block-DCT quantization -> sensor noise. Deterministic in (seed, params).
Image synth_clean(uint64_t seed, int size, const PipelineParams& params);

/// Copies the donor region into the target at the paste offset, carrying the
/// donor's traces. Returns the forged image and the binary mask of the
/// pasted support.
std::pair<Image, Mask> make_forgery(const Image& target, const Image& donor,
                                    const ForgerySpec& spec, uint64_t seed);

struct DatasetRecipe {
    int count = 20;
    int size = 256;
    uint64_t seed = 7;
    int region_size = 64;          // square splice
    PipelineParams target_params{};                 // phase 0
    PipelineParams donor_params{3, true, 0.2, 0.02, 0};  // shifted Bayer phase
    int grid_offset = 4;           // paste offset mod 8, misaligns the DCT grid
};

struct ForgeryCase {
    Image clean;
    Image forged;
    Mask mask;
    ForgerySpec spec;
    uint64_t clean_seed = 0;
    uint64_t donor_seed = 0;
};

/// Default synthetic forged set (the desk-scale benchmark).
std::vector<ForgeryCase> generate_dataset(const DatasetRecipe& recipe);

}  // namespace cfdiff
