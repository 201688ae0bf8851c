#include "cfdiff/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace cfdiff {

size_t Mask::sum() const {
    size_t s = 0;
    for (uint8_t v : data) s += v;
    return s;
}

ConfusionW weighted_confusion(const HeatMap& heat, const Mask& mask) {
    if (heat.height != mask.height || heat.width != mask.width)
        throw std::invalid_argument("weighted_confusion: shape mismatch");
    ConfusionW c;
    for (size_t i = 0; i < heat.data.size(); ++i) {
        double h = heat.data[i];
        if (!(h >= 0.0 && h <= 1.0))
            throw std::invalid_argument("weighted_confusion: heat value outside [0,1]");
        uint8_t m = mask.data[i];
        if (m > 1) throw std::invalid_argument("weighted_confusion: mask is not binary");
        if (m) {
            c.tp += h;
            c.fn += 1.0 - h;
        } else {
            c.fp += h;
            c.tn += 1.0 - h;
        }
    }
    return c;
}

Scores score(const ConfusionW& conf) {
    Scores s;
    double tp = conf.tp, fp = conf.fp, tn = conf.tn, fn = conf.fn;
    double iou_den = tp + fn + fp;
    s.iou = iou_den > 0.0 ? tp / iou_den : 0.0;
    double f1_den = 2.0 * tp + fp + fn;
    s.f1 = f1_den > 0.0 ? 2.0 * tp / f1_den : 0.0;
    double d1 = tp + fp, d2 = tp + fn, d3 = tn + fp, d4 = tn + fn;
    if (d1 > 0.0 && d2 > 0.0 && d3 > 0.0 && d4 > 0.0)
        s.mcc = (tp * tn - fp * fn) / std::sqrt(d1 * d2 * d3 * d4);
    return s;
}

double psnr(const Image& x, const Image& y, double peak, double cap) {
    require_same_shape(x, y, "psnr");
    double mse = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double d = x.data[i] - y.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(x.size());
    if (mse == 0.0) return cap;
    double v = 10.0 * std::log10(peak * peak / mse);
    return v > cap ? cap : v;
}

DeltaReport delta_report(const std::map<std::string, double>& before,
                         const std::map<std::string, double>& after) {
    if (before.size() != after.size())
        throw std::invalid_argument("delta_report: detector sets differ");
    DeltaReport r;
    double wsum = 0.0, acc = 0.0;
    for (const auto& [name, b] : before) {
        auto it = after.find(name);
        if (it == after.end())
            throw std::invalid_argument("delta_report: missing detector '" + name + "' in after");
        double d = it->second - b;
        r.delta[name] = d;
        acc += b * d;
        wsum += b;
    }
    r.avg_w = wsum != 0.0 ? acc / wsum : 0.0;
    return r;
}

}  // namespace cfdiff
