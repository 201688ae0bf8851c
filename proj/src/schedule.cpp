#include "cfdiff/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cfdiff {

NoiseSchedule::NoiseSchedule(int T, double beta_start, double beta_end) : T_(T) {
    if (T < 1) throw std::invalid_argument("NoiseSchedule: T must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw std::invalid_argument("NoiseSchedule: need 0 < beta_start <= beta_end < 1");

    betas_.resize(T);
    alphas_.resize(T);
    alpha_bars_.resize(T);
    sigmas_.resize(T);

    double abar = 1.0;
    for (int i = 0; i < T; ++i) {
        double frac = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
        double b = beta_start + (beta_end - beta_start) * frac;
        double abar_prev = abar;
        betas_[i] = b;
        alphas_[i] = 1.0 - b;
        abar *= 1.0 - b;
        alpha_bars_[i] = abar;
        // posterior ("beta tilde") variance; zero on the final reverse step
        sigmas_[i] = i == 0 ? 0.0 : std::sqrt(b * (1.0 - abar_prev) / (1.0 - abar));
    }
}

void NoiseSchedule::check_step(int t, bool allow_zero) const {
    int lo = allow_zero ? 0 : 1;
    if (t < lo || t > T_)
        throw std::out_of_range("NoiseSchedule: step " + std::to_string(t) + " outside [" +
                                std::to_string(lo) + ", " + std::to_string(T_) + "]");
}

double NoiseSchedule::beta(int t) const {
    check_step(t, false);
    return betas_[t - 1];
}

double NoiseSchedule::alpha(int t) const {
    check_step(t, false);
    return alphas_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
    check_step(t, true);
    return t == 0 ? 1.0 : alpha_bars_[t - 1];
}

double NoiseSchedule::sigma(int t) const {
    check_step(t, false);
    return sigmas_[t - 1];
}

double NoiseSchedule::guidance_scale(int t, double base_scale) const {
    check_step(t, false);
    if (base_scale < 0.0) throw std::invalid_argument("guidance_scale: base scale must be >= 0");
    double abar = alpha_bars_[t - 1];
    return base_scale * std::sqrt(1.0 - abar) / std::sqrt(abar);
}

NoiseSchedule default_schedule() {
    return NoiseSchedule(kDefaultSteps, kDefaultBetaStart, kDefaultBetaEnd);
}

}  // namespace cfdiff
