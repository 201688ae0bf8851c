#pragma once

#include "cfdiff/image.hpp"

namespace cfdiff {

struct SsimParams {
    int window = 11;        // Gaussian window size
    double sigma = 1.5;     // window std
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 2.0;  // L; 2 for model range [-1,1], 1 for [0,1]
};

/// Mean SSIM over all valid sliding-window positions and channels.
/// Inputs are used as-is (no clamping), so noisy intermediates outside the
/// nominal range are handled smoothly.
double ssim(const Image& x, const Image& y, const SsimParams& params = {});

/// Gradient of ssim(x, y, params) with respect to x. Analytic; finite
/// differences are kept as a test oracle only.
Image ssim_gradient(const Image& x, const Image& y, const SsimParams& params = {});

enum class MetricKind { NegSsim, Mse };

struct GuidanceMetric {
    MetricKind kind = MetricKind::NegSsim;
    SsimParams ssim_params{};
};

/// D(x, x_in): mean squared difference, or -SSIM.
double metric_value(const GuidanceMetric& metric, const Image& x, const Image& x_in);

/// dD/dx, exact.
Image metric_gradient(const GuidanceMetric& metric, const Image& x, const Image& x_in);

GuidanceMetric parse_metric(const std::string& name);  // "ssim" | "mse"

}  // namespace cfdiff
