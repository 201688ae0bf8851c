#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "cfdiff/image.hpp"

namespace cfdiff {

// splitmix64 finalizer; used both for seed mixing and stream derivation.
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d49bb133111ebULL;
    return z ^ (z >> 31);
}

// Noise stream for one (image, patch) unit of work. Streams derived from the
// same root seed with distinct ids never overlap, so per-image parallelism
// cannot change results.
inline uint64_t derive_stream_seed(uint64_t root, uint64_t image_id, uint64_t patch_index) {
    uint64_t s = mix64(root ^ 0x8f1bbcdc1234abcdULL);
    s = mix64(s ^ image_id);
    s = mix64(s ^ (patch_index + 0x1000000007ULL));
    return s;
}

// Deterministic Gaussian generator: mt19937_64 (sequence pinned by the
// standard) + explicit Box-Muller, so outputs are identical across stdlibs.
class GaussianRng {
public:
    explicit GaussianRng(uint64_t seed) : eng_(seed) {}

    double uniform() {  // (0, 1)
        return (static_cast<double>(eng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Image gaussian_image(int h, int w, int c) {
        Image img(h, w, c);
        for (double& v : img.data) v = gaussian();
        return img;
    }

    uint64_t next_u64() { return eng_(); }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace cfdiff
