#pragma once

#include <map>
#include <string>
#include <vector>

#include "cfdiff/image.hpp"

namespace cfdiff {

/// Continuous detection map, values in [0, 1], single plane.
struct HeatMap {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    HeatMap() = default;
    HeatMap(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
};

/// Binary ground-truth mask (values exactly 0 or 1).
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> data;

    Mask() = default;
    Mask(int h, int w, uint8_t fill = 0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    uint8_t& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t sum() const;
};

/// Weighted confusion counts for a continuous heatmap against a binary mask.
struct ConfusionW {
    double tp = 0, fp = 0, tn = 0, fn = 0;
};

struct Scores {
    double iou = 0, mcc = 0, f1 = 0;
};

/// TPw = sum H*M, FNw = sum (1-H)*M, FPw = sum H*(1-M), TNw = sum (1-H)(1-M).
ConfusionW weighted_confusion(const HeatMap& heat, const Mask& mask);

/// IoU = TP/(TP+FN+FP), F1 = 2TP/(2TP+FP+FN),
/// MCC = (TP*TN - FP*FN)/sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN)).
/// Degenerate denominators yield 0 by definition. All three are symmetric
/// under exchanging FP and FN.
Scores score(const ConfusionW& conf);

/// 10*log10(peak^2/MSE), capped at 80 dB (identical images report 80).
double psnr(const Image& x, const Image& y, double peak = 1.0, double cap = 80.0);

/// Per-detector before/after delta summary. Keys are detector names; values
/// are dataset-mean scores of one metric (e.g. MCC).
struct DeltaReport {
    std::map<std::string, double> delta;  // mean_after - mean_before
    double avg_w = 0;                     // deltas weighted by mean_before
};

DeltaReport delta_report(const std::map<std::string, double>& before,
                         const std::map<std::string, double>& after);

}  // namespace cfdiff
