#include "cfdiff/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cfdiff {

Image forward_sample(const Image& x0, int t, const Image& eps, const NoiseSchedule& schedule) {
    require_same_shape(x0, eps, "forward_sample");
    double abar = schedule.alpha_bar(t);
    double sab = std::sqrt(abar);
    double somab = std::sqrt(1.0 - abar);
    Image out(x0.height, x0.width, x0.channels);
    for (size_t i = 0; i < x0.size(); ++i) out.data[i] = sab * x0.data[i] + somab * eps.data[i];
    return out;
}

namespace {

Image reverse_mean(const Image& x_t, int t, const Denoiser& denoiser,
                   const NoiseSchedule& schedule) {
    Image eps_hat = denoiser.predict_eps(x_t, t);
    require_same_shape(x_t, eps_hat, "reverse_step");
    for (double v : eps_hat.data)
        if (!std::isfinite(v)) throw std::runtime_error("reverse_step: non-finite denoiser output");

    double coef = schedule.beta(t) / std::sqrt(1.0 - schedule.alpha_bar(t));
    double inv_sa = 1.0 / std::sqrt(schedule.alpha(t));
    Image mu(x_t.height, x_t.width, x_t.channels);
    for (size_t i = 0; i < x_t.size(); ++i)
        mu.data[i] = (x_t.data[i] - coef * eps_hat.data[i]) * inv_sa;
    return mu;
}

}  // namespace

Image reverse_step(const Image& x_t, int t, const Denoiser& denoiser,
                   const NoiseSchedule& schedule, const Image& noise) {
    require_same_shape(x_t, noise, "reverse_step");
    Image mu = reverse_mean(x_t, t, denoiser, schedule);
    double sigma = schedule.sigma(t);
    if (sigma > 0.0)
        for (size_t i = 0; i < mu.size(); ++i) mu.data[i] += sigma * noise.data[i];
    return mu;
}

Image guided_reverse_step(const Image& x_t, int t, const Image& x_in, const Denoiser& denoiser,
                          const NoiseSchedule& schedule, const GuidanceMetric& metric,
                          double base_scale, const Image& noise) {
    require_same_shape(x_t, noise, "guided_reverse_step");
    require_same_shape(x_t, x_in, "guided_reverse_step");
    Image mu = reverse_mean(x_t, t, denoiser, schedule);
    double sigma = schedule.sigma(t);
    if (base_scale > 0.0) {
        // Sigma in the guided mean is sigma_t^2 * I (reverse-step variance).
        double shift = schedule.guidance_scale(t, base_scale) * sigma * sigma;
        if (shift > 0.0) {
            Image grad = metric_gradient(metric, x_t, x_in);
            for (size_t i = 0; i < mu.size(); ++i) mu.data[i] -= shift * grad.data[i];
        }
    }
    if (sigma > 0.0)
        for (size_t i = 0; i < mu.size(); ++i) mu.data[i] += sigma * noise.data[i];
    return mu;
}

Image purify(const Image& x_in, const Denoiser& denoiser, const NoiseSchedule& schedule,
             const PurifyConfig& config, GaussianRng& rng) {
    if (config.t_star < 0 || config.t_star > schedule.steps())
        throw std::invalid_argument("purify: t_star outside [0, T]");
    if (config.scale < 0.0) throw std::invalid_argument("purify: scale must be >= 0");
    if (config.t_star == 0) return clamp_unit(x_in);

    Image eps = rng.gaussian_image(x_in.height, x_in.width, x_in.channels);
    Image x = forward_sample(x_in, config.t_star, eps, schedule);
    for (int t = config.t_star; t >= 1; --t) {
        Image noise = rng.gaussian_image(x_in.height, x_in.width, x_in.channels);
        x = config.guided ? guided_reverse_step(x, t, x_in, denoiser, schedule, config.metric,
                                                config.scale, noise)
                          : reverse_step(x, t, denoiser, schedule, noise);
        if (config.clamp_each_step) x = clamp_unit(std::move(x));
    }
    return clamp_unit(std::move(x));
}

Image purify(const Image& x_in, const Denoiser& denoiser, const NoiseSchedule& schedule,
             const PurifyConfig& config) {
    GaussianRng rng(config.seed);
    return purify(x_in, denoiser, schedule, config, rng);
}

Image median_purify(const Image& x_in, int kernel) {
    if (kernel < 3 || kernel % 2 == 0)
        throw std::invalid_argument("median_purify: kernel must be odd and >= 3");
    int r = kernel / 2;
    Image out(x_in.height, x_in.width, x_in.channels);
    std::vector<double> window(static_cast<size_t>(kernel) * kernel);
    auto reflect = [](int i, int n) {
        while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - 1 - i;
        return i;
    };
    for (int c = 0; c < x_in.channels; ++c)
        for (int y = 0; y < x_in.height; ++y)
            for (int x = 0; x < x_in.width; ++x) {
                size_t n = 0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx)
                        window[n++] = x_in.at(reflect(y + dy, x_in.height),
                                              reflect(x + dx, x_in.width), c);
                auto mid = window.begin() + n / 2;
                std::nth_element(window.begin(), mid, window.begin() + n);
                out.at(y, x, c) = *mid;
            }
    return out;
}

}  // namespace cfdiff
