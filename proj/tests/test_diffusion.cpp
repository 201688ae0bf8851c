#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cfdiff/diffusion.hpp"
#include "cfdiff/rng.hpp"

using namespace cfdiff;

namespace {

struct ZeroDenoiser : Denoiser {
    Image predict_eps(const Image& x_t, int) const override {
        return Image(x_t.height, x_t.width, x_t.channels, 0.0);
    }
};

}  // namespace

TEST_CASE("forward sample closed form") {
    NoiseSchedule s(3, 0.1, 0.1);
    Image x0(3, 3, 1, 1.0), eps(3, 3, 1, 1.0);
    SUBCASE("t = 0 is the identity") {
        Image x = forward_sample(x0, 0, eps, s);
        CHECK(x.data == x0.data);
    }
    SUBCASE("abar = 0.81 worked value") {
        Image x = forward_sample(x0, 2, eps, s);
        double expected = std::sqrt(0.81) + std::sqrt(0.19);  // 1.335889...
        for (double v : x.data) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
        CHECK(x.data[0] == doctest::Approx(1.335890).epsilon(1e-5));
    }
    SUBCASE("zero noise scales by sqrt(abar)") {
        Image zero(3, 3, 1, 0.0);
        Image x = forward_sample(x0, 2, zero, s);
        for (double v : x.data) CHECK(v == doctest::Approx(std::sqrt(0.81)).epsilon(1e-12));
    }
}

TEST_CASE("forward sample marginal statistics") {
    NoiseSchedule s = default_schedule();
    const int t = 300, n = 20000;
    GaussianRng rng(8);
    Image x0(1, 1, 1, 0.5);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        Image eps(1, 1, 1, rng.gaussian());
        double v = forward_sample(x0, t, eps, s).data[0];
        sum += v;
        sum2 += v * v;
    }
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    CHECK(mean == doctest::Approx(std::sqrt(s.alpha_bar(t)) * 0.5).epsilon(0.05));
    CHECK(var == doctest::Approx(1.0 - s.alpha_bar(t)).epsilon(0.05));
}

TEST_CASE("reverse step with zero eps-hat") {
    NoiseSchedule s(3, 0.1, 0.1);
    ZeroDenoiser d;
    SUBCASE("final step is deterministic: divide by sqrt(alpha)") {
        Image x_t(2, 2, 1, 0.9), noise(2, 2, 1, 123.0);  // noise must be ignored at t=1
        Image out = reverse_step(x_t, 1, d, s, noise);
        for (double v : out.data)
            CHECK(v == doctest::Approx(0.9 / std::sqrt(0.9)).epsilon(1e-12));
        CHECK(out.data[0] == doctest::Approx(0.948683).epsilon(1e-5));
        Image noise2(2, 2, 1, -77.0);
        Image out2 = reverse_step(x_t, 1, d, s, noise2);
        CHECK(out.data == out2.data);
    }
    SUBCASE("noisy step adds sigma_t * noise") {
        Image x_t(2, 2, 1, 0.5), noise(2, 2, 1, 1.0);
        Image out = reverse_step(x_t, 2, d, s, noise);
        double expected = 0.5 / std::sqrt(0.9) + s.sigma(2);
        for (double v : out.data) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("reverse step uses the predicted eps in the mean") {
    struct ConstEps : Denoiser {
        Image predict_eps(const Image& x, int) const override {
            return Image(x.height, x.width, x.channels, 0.25);
        }
    } d;
    NoiseSchedule s(3, 0.1, 0.1);
    Image x_t(1, 1, 1, 0.5), noise(1, 1, 1, 0.0);
    Image out = reverse_step(x_t, 2, d, s, noise);
    double mu = (0.5 - 0.1 / std::sqrt(1.0 - 0.81) * 0.25) / std::sqrt(0.9);
    CHECK(out.data[0] == doctest::Approx(mu).epsilon(1e-12));
}

TEST_CASE("guided step with zero base scale is bit-identical to unguided") {
    NoiseSchedule s(10, 1e-3, 0.1);
    ZeroDenoiser d;
    GaussianRng rng(21);
    Image x_t = rng.gaussian_image(16, 16, 1);
    Image x_in = rng.gaussian_image(16, 16, 1);
    for (int t : {1, 4, 10}) {
        Image noise = rng.gaussian_image(16, 16, 1);
        Image a = reverse_step(x_t, t, d, s, noise);
        Image b = guided_reverse_step(x_t, t, x_in, d, s, parse_metric("ssim"), 0.0, noise);
        CHECK(a.data == b.data);
    }
}

TEST_CASE("guided mse step shifts the mean by -s_t sigma^2 grad") {
    NoiseSchedule s(3, 0.1, 0.1);
    ZeroDenoiser d;
    const int h = 4, w = 4;
    Image x_t(h, w, 1, 0.6), x_in(h, w, 1, 0.1), noise(h, w, 1, 0.0);
    double base = 2.0;
    Image unguided = reverse_step(x_t, 2, d, s, noise);
    Image guided = guided_reverse_step(x_t, 2, x_in, d, s, parse_metric("mse"), base, noise);
    double grad = 2.0 * 0.5 / (h * w);  // d/dx mean (x - x_in)^2, per pixel
    double shift = -s.guidance_scale(2, base) * s.sigma(2) * s.sigma(2) * grad;
    for (int i = 0; i < h * w; ++i)
        CHECK(guided.data[i] - unguided.data[i] == doctest::Approx(shift).epsilon(1e-12));
}

TEST_CASE("guided step at the input is unshifted for mse") {
    NoiseSchedule s(3, 0.1, 0.1);
    ZeroDenoiser d;
    Image x_t(4, 4, 1, 0.3), noise(4, 4, 1, 0.5);
    Image a = reverse_step(x_t, 2, d, s, noise);
    Image b = guided_reverse_step(x_t, 2, x_t, d, s, parse_metric("mse"), 1e6, noise);
    for (size_t i = 0; i < a.data.size(); ++i)
        CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-12));
}

TEST_CASE("purify basics") {
    NoiseSchedule s(20, 1e-3, 0.05);
    ZeroDenoiser d;
    GaussianRng rng(14);
    Image x = rng.gaussian_image(12, 12, 1);
    for (double& v : x.data) v = std::clamp(0.4 * v, -1.0, 1.0);

    SUBCASE("t_star = 0 returns the clamped input") {
        PurifyConfig pc;
        pc.t_star = 0;
        Image out = purify(x, d, s, pc);
        CHECK(out.data == x.data);
    }
    SUBCASE("deterministic for a fixed seed, different across seeds") {
        PurifyConfig pc;
        pc.t_star = 10;
        pc.seed = 3;
        Image a = purify(x, d, s, pc);
        Image b = purify(x, d, s, pc);
        CHECK(a.data == b.data);
        pc.seed = 4;
        Image c = purify(x, d, s, pc);
        CHECK(a.data != c.data);
    }
    SUBCASE("output is clamped to model range") {
        PurifyConfig pc;
        pc.t_star = 20;
        Image out = purify(x, d, s, pc);
        for (double v : out.data) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
    }
    SUBCASE("t_star out of range throws") {
        PurifyConfig pc;
        pc.t_star = 21;
        CHECK_THROWS(purify(x, d, s, pc));
    }
}

TEST_CASE("median filter") {
    SUBCASE("constant image unchanged") {
        Image x(8, 8, 3, 0.25);
        Image out = median_purify(x, 3);
        CHECK(out.data == x.data);
    }
    SUBCASE("single-row oracle with reflected borders") {
        Image x(1, 7, 1);
        x.data = {1, 2, 3, 100, 5, 6, 7};
        Image out = median_purify(x, 3);
        std::vector<double> expected = {1, 2, 3, 5, 6, 6, 7};
        CHECK(out.data == expected);
    }
    SUBCASE("isolated impulse removed") {
        Image x(9, 9, 1, 0.0);
        x.at(4, 4, 0) = 1.0;
        Image out = median_purify(x, 3);
        for (double v : out.data) CHECK(v == 0.0);
    }
    SUBCASE("matches a brute-force sliding median") {
        GaussianRng rng(55);
        Image x = rng.gaussian_image(11, 13, 3);
        Image out = median_purify(x, 5);
        auto reflect = [](int i, int n) {
            int period = 2 * n;
            int m = ((i % period) + period) % period;
            return m < n ? m : period - 1 - m;
        };
        for (int y = 0; y < x.height; ++y)
            for (int xx = 0; xx < x.width; ++xx)
                for (int c = 0; c < 3; ++c) {
                    std::vector<double> vals;
                    for (int dy = -2; dy <= 2; ++dy)
                        for (int dx = -2; dx <= 2; ++dx)
                            vals.push_back(x.at(reflect(y + dy, x.height),
                                                reflect(xx + dx, x.width), c));
                    std::sort(vals.begin(), vals.end());
                    CHECK(out.at(y, xx, c) == vals[vals.size() / 2]);
                }
    }
    SUBCASE("even or tiny kernels rejected") {
        Image x(8, 8, 1, 0.0);
        CHECK_THROWS(median_purify(x, 4));
        CHECK_THROWS(median_purify(x, 1));
    }
}
