#pragma once

#include <string>

#include "cfdiff/image.hpp"
#include "cfdiff/metrics.hpp"

namespace cfdiff {

/// 8-bit PNG (gray or RGB) <-> model-range image. Export rounds
/// half-away-from-zero after clamping.
void write_png(const Image& img, const std::string& path);
Image read_png(const std::string& path);

/// Binary masks as 8-bit grayscale PNG, 0/255.
void write_mask_png(const Mask& mask, const std::string& path);
Mask read_mask_png(const std::string& path);

/// Heatmaps: PFM (grayscale portable float map, little-endian, scale -1.0)
/// or 16-bit grayscale PNG with value = round(H * 65535).
void write_pfm(const HeatMap& heat, const std::string& path);
HeatMap read_pfm(const std::string& path);
void write_heatmap_png16(const HeatMap& heat, const std::string& path);

}  // namespace cfdiff
