#pragma once

#include <cstddef>
#include <vector>

namespace cfdiff {

/// Linear-beta diffusion noise schedule. All arrays are computed once at
/// construction, in double precision, and never mutated afterwards; a
/// schedule can be shared freely across threads.
///
/// Index convention: arrays are 0-based, entry [t-1] belongs to time-step t
/// (t = 1..T). Use the accessors below rather than raw indexing.
class NoiseSchedule {
public:
    NoiseSchedule(int T, double beta_start, double beta_end);

    int steps() const { return T_; }

    double beta(int t) const;        // t in [1, T]
    double alpha(int t) const;       // 1 - beta_t
    double alpha_bar(int t) const;   // t in [0, T]; alpha_bar(0) == 1
    double sigma(int t) const;       // posterior std; sigma(1) == 0

    /// Guidance scale schedule: s_t = s * sqrt(1 - abar_t) / sqrt(abar_t).
    /// Strictly increasing in t for s > 0.
    double guidance_scale(int t, double base_scale) const;

private:
    void check_step(int t, bool allow_zero) const;

    int T_;
    std::vector<double> betas_;
    std::vector<double> alphas_;
    std::vector<double> alpha_bars_;
    std::vector<double> sigmas_;
};

/// The default schedule used everywhere a config does not override it
/// (standard DDPM linear schedule; t* = 40 is interpreted against this T).
inline constexpr int kDefaultSteps = 1000;
inline constexpr double kDefaultBetaStart = 1e-4;
inline constexpr double kDefaultBetaEnd = 0.02;

NoiseSchedule default_schedule();

}  // namespace cfdiff
