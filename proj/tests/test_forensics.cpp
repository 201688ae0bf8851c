#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cfdiff/forensics.hpp"
#include "cfdiff/forgerylab.hpp"
#include "cfdiff/rng.hpp"

using namespace cfdiff;

namespace {

double mean_heat(const HeatMap& h) {
    double acc = 0.0;
    for (double v : h.data) acc += v;
    return acc / h.data.size();
}

// mean heat inside vs outside the mask
std::pair<double, double> split_heat(const HeatMap& h, const Mask& m) {
    double in = 0.0, out = 0.0;
    size_t nin = 0, nout = 0;
    for (size_t i = 0; i < h.data.size(); ++i) {
        if (m.data[i]) {
            in += h.data[i];
            ++nin;
        } else {
            out += h.data[i];
            ++nout;
        }
    }
    return {in / std::max<size_t>(nin, 1), out / std::max<size_t>(nout, 1)};
}

Image noise_image(uint64_t seed, int size) {
    GaussianRng rng(seed);
    Image img = rng.gaussian_image(size, size, 3);
    for (double& v : img.data) v = std::clamp(0.25 * v, -1.0, 1.0);
    return img;
}

}  // namespace

TEST_CASE("heatmaps are in range and match the image size") {
    Image img = noise_image(1, 128);
    for (const auto& name : all_detector_names()) {
        HeatMap h = detector_by_name(name)(img);
        CHECK(h.height == 128);
        CHECK(h.width == 128);
        for (double v : h.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("detector lookup") {
    CHECK(detector_by_name("grid") == &detect_grid);
    CHECK(detector_by_name("variance") == &detect_variance);
    CHECK(detector_by_name("residual") == &detect_residual);
    CHECK_THROWS(detector_by_name("bogus"));
    CHECK(all_detector_names().size() == 3);
}

TEST_CASE("grid detector is quiet on trace-free noise") {
    double acc = 0.0;
    for (int i = 0; i < 20; ++i) acc += mean_heat(detect_grid(noise_image(100 + i, 128)));
    CHECK(acc / 20 < 0.2);
}

TEST_CASE("grid detector is quiet on consistently quantized images") {
    PipelineParams p;  // quality 0.5, grid at (0,0)
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) acc += mean_heat(detect_grid(synth_clean(200 + i, 128, p)));
    CHECK(acc / 5 < 0.2);
}

TEST_CASE("grid detector localizes a misaligned splice") {
    DatasetRecipe r;
    r.count = 5;
    r.size = 192;
    r.region_size = 64;
    r.seed = 31;
    auto cases = generate_dataset(r);
    double in_acc = 0.0, out_acc = 0.0;
    for (const auto& fc : cases) {
        auto [in, out] = split_heat(detect_grid(fc.forged), fc.mask);
        in_acc += in;
        out_acc += out;
    }
    CHECK(in_acc > 2.0 * out_acc);
}

TEST_CASE("variance detector") {
    SUBCASE("constant image yields zero heat") {
        Image img(64, 64, 3, 0.25);
        HeatMap h = detect_variance(img);
        for (double v : h.data) CHECK(v == 0.0);
    }
    SUBCASE("quiet on phase-consistent images") {
        PipelineParams p;
        p.quantize = false;
        double acc = 0.0;
        for (int i = 0; i < 5; ++i)
            acc += mean_heat(detect_variance(synth_clean(300 + i, 128, p)));
        CHECK(acc / 5 < 0.2);
    }
    SUBCASE("flags a shifted-phase splice") {
        DatasetRecipe r;
        r.count = 5;
        r.size = 192;
        r.region_size = 64;
        r.seed = 57;
        r.target_params.quantize = false;
        r.donor_params.quantize = false;
        r.target_params.noise_std = 0.0;
        r.donor_params.noise_std = 0.0;
        auto cases = generate_dataset(r);
        double in_acc = 0.0, out_acc = 0.0;
        for (const auto& fc : cases) {
            auto [in, out] = split_heat(detect_variance(fc.forged), fc.mask);
            in_acc += in;
            out_acc += out;
        }
        CHECK(in_acc > 1.5 * out_acc);
    }
}

TEST_CASE("residual detector") {
    SUBCASE("constant image yields zero heat") {
        Image img(64, 64, 1, -0.5);
        HeatMap h = detect_residual(img);
        for (double v : h.data) CHECK(v == 0.0);
    }
    SUBCASE("quiet on homogeneous noise") {
        double acc = 0.0;
        for (int i = 0; i < 10; ++i) acc += mean_heat(detect_residual(noise_image(400 + i, 128)));
        CHECK(acc / 10 < 0.2);
    }
    SUBCASE("flags a noisier donor") {
        DatasetRecipe r;
        r.count = 5;
        r.size = 192;
        r.region_size = 64;
        r.seed = 83;
        r.target_params.noise_std = 0.02;
        r.donor_params.noise_std = 0.06;
        r.donor_params.bayer_phase = 0;  // isolate the noise trace
        auto cases = generate_dataset(r);
        double in_acc = 0.0, out_acc = 0.0;
        for (const auto& fc : cases) {
            auto [in, out] = split_heat(detect_residual(fc.forged), fc.mask);
            in_acc += in;
            out_acc += out;
        }
        CHECK(in_acc > 1.5 * out_acc);
    }
}

TEST_CASE("detectors reject undersized images") {
    Image tiny(32, 32, 1, 0.0);
    CHECK_THROWS(detect_grid(tiny));
    Image tinier(16, 16, 1, 0.0);
    CHECK_THROWS(detect_variance(tinier));
    CHECK_THROWS(detect_residual(tinier));
}
