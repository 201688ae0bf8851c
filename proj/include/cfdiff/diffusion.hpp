#pragma once

#include <cstdint>

#include "cfdiff/denoiser.hpp"
#include "cfdiff/guidance.hpp"
#include "cfdiff/image.hpp"
#include "cfdiff/rng.hpp"
#include "cfdiff/schedule.hpp"

namespace cfdiff {

struct PurifyConfig {
    int t_star = 40;
    bool guided = false;
    double scale = 1e6;            // base guidance scale s
    GuidanceMetric metric{};       // default -SSIM
    uint64_t seed = 0;
    bool clamp_each_step = false;  // final clamp only, by default
};

/// Closed-form forward sample: sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
/// Not clamped.
Image forward_sample(const Image& x0, int t, const Image& eps, const NoiseSchedule& schedule);

/// One ancestral reverse step from x_t to x_{t-1}:
///   mu = (x_t - beta_t/sqrt(1-abar_t) * eps_hat) / sqrt(alpha_t)
///   x_{t-1} = mu + sigma_t * noise          (sigma_1 = 0)
Image reverse_step(const Image& x_t, int t, const Denoiser& denoiser,
                   const NoiseSchedule& schedule, const Image& noise);

/// Guided reverse step: mean shifted by -s_t * sigma_t^2 * grad D(x_t, x_in).
/// Bit-identical to reverse_step when base_scale == 0 and noise is shared.
Image guided_reverse_step(const Image& x_t, int t, const Image& x_in, const Denoiser& denoiser,
                          const NoiseSchedule& schedule, const GuidanceMetric& metric,
                          double base_scale, const Image& noise);

/// Full purification: diffuse x_in to t_star, then reverse to 0 (guided or
/// not), clamping the result to [-1, 1]. Noise comes from the supplied
/// stream; the convenience overload seeds a fresh stream from config.seed.
Image purify(const Image& x_in, const Denoiser& denoiser, const NoiseSchedule& schedule,
             const PurifyConfig& config, GaussianRng& rng);
Image purify(const Image& x_in, const Denoiser& denoiser, const NoiseSchedule& schedule,
             const PurifyConfig& config);

/// Per-channel spatial median filter with reflected borders (classic
/// anti-forensics baseline). Kernel must be odd and >= 3.
Image median_purify(const Image& x_in, int kernel);

}  // namespace cfdiff
