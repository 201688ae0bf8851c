#pragma once

#include <string>
#include <vector>

#include "cfdiff/image.hpp"
#include "cfdiff/metrics.hpp"

namespace cfdiff {

/// Localizes 8x8 quantization-grid inconsistencies: per 64x64 window, the
/// grid origin is estimated by counting near-zero DCT coefficients over the
/// 64 candidate offsets; windows that disagree with the global majority
/// origin get heat proportional to the (min-max normalized) vote margin.
HeatMap detect_grid(const Image& image);

/// Localizes Bayer-phase inconsistencies: per 32x32 window, the dominant
/// CFA phase is estimated from the 2x2-phase variance profile of high-pass
/// residuals; heat marks disagreement with the global majority phase.
HeatMap detect_variance(const Image& image);

/// Localizes noise-level inconsistencies: per 32x32 window, a robust (MAD)
/// noise-std estimate; heat is the normalized deviation from the image's
/// median estimate, clipped to [0, 1].
HeatMap detect_residual(const Image& image);

using DetectorFn = HeatMap (*)(const Image&);

DetectorFn detector_by_name(const std::string& name);  // "grid"|"variance"|"residual"
const std::vector<std::string>& all_detector_names();

}  // namespace cfdiff
