#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "cfdiff/denoiser.hpp"
#include "cfdiff/diffusion.hpp"
#include "cfdiff/rng.hpp"
#include "cfdiff/schedule.hpp"

using namespace cfdiff;

TEST_CASE("analytic eps: standard-normal target recovers the noise direction") {
    // m = 0, v = 1: E[x0|x_t] = sqrt(abar) x_t, eps_hat = sqrt(1-abar) x_t.
    NoiseSchedule s(3, 0.1, 0.1);
    GaussianRng rng(9);
    Image x_t = rng.gaussian_image(6, 5, 1);
    for (int t = 1; t <= 3; ++t) {
        Image eps = analytic_gaussian_eps({0.0}, {1.0}, x_t, t, s);
        double root = std::sqrt(1.0 - s.alpha_bar(t));
        for (size_t i = 0; i < x_t.data.size(); ++i)
            CHECK(eps.data[i] == doctest::Approx(root * x_t.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("analytic eps vanishes at the scaled mean") {
    NoiseSchedule s(3, 0.1, 0.1);
    std::vector<double> m(20, 0.7), v(20, 2.5);
    Image x_t(4, 5, 1);
    for (double& p : x_t.data) p = std::sqrt(s.alpha_bar(2)) * 0.7;
    Image eps = analytic_gaussian_eps(m, v, x_t, 2, s);
    for (double p : eps.data) CHECK(p == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("analytic eps: scalar worked case and Monte-Carlo posterior oracle") {
    NoiseSchedule s(3, 0.1, 0.1);  // abar_2 = 0.81
    Image x_t(1, 1, 1, 1.0);
    Image eps = analytic_gaussian_eps({0.0}, {4.0}, x_t, 2, s);
    double abar = 0.81;
    double e_post = 0.9 * 4.0 * 1.0 / (abar * 4.0 + 1.0 - abar);  // 3.6/3.43
    CHECK(e_post == doctest::Approx(1.049563).epsilon(1e-6));
    CHECK(eps.data[0] ==
          doctest::Approx((1.0 - std::sqrt(abar) * e_post) / std::sqrt(1.0 - abar))
              .epsilon(1e-12));

    // Importance-sampling oracle for E[x0 | x_t = 1]: x0 ~ N(0,4) weighted by
    // the forward likelihood N(x_t; sqrt(abar) x0, 1-abar).
    GaussianRng rng(12345);
    double wsum = 0.0, wx = 0.0;
    for (int i = 0; i < 400000; ++i) {
        double x0 = 2.0 * rng.gaussian();
        double r = 1.0 - 0.9 * x0;
        double w = std::exp(-r * r / (2.0 * (1.0 - abar)));
        wsum += w;
        wx += w * x0;
    }
    CHECK(wx / wsum == doctest::Approx(e_post).epsilon(0.01));
}

TEST_CASE("analytic eps: v -> 0 collapses the posterior to the mean") {
    NoiseSchedule s(3, 0.1, 0.1);
    Image x_t(2, 2, 1, 0.3);
    Image eps = analytic_gaussian_eps({0.25}, {1e-12}, x_t, 2, s);
    // eps_hat should reconstruct x0 = m exactly
    double abar = 0.81;
    for (double p : eps.data)
        CHECK(p == doctest::Approx((0.3 - std::sqrt(abar) * 0.25) / std::sqrt(1.0 - abar))
                       .epsilon(1e-6));
}

TEST_CASE("analytic eps input validation") {
    NoiseSchedule s(3, 0.1, 0.1);
    Image x_t(2, 2, 1, 0.0);
    CHECK_THROWS(analytic_gaussian_eps({0.0, 0.0}, {1.0}, x_t, 2, s));  // 2 != 4 and != 1
    CHECK_THROWS(analytic_gaussian_eps({0.0}, {-1.0}, x_t, 2, s));
    CHECK_THROWS(analytic_gaussian_eps({0.0}, {1.0}, x_t, 0, s));
}

TEST_CASE("conv net with zero weights predicts zero") {
    ConvNet net(default_conv_layers(1), 1);
    for (float& p : net.parameters()) p = 0.0f;
    ConvNetDenoiser d(std::move(net), 1, 100);
    GaussianRng rng(4);
    Image x = rng.gaussian_image(16, 16, 1);
    Image eps = d.predict_eps(x, 37);
    for (double v : eps.data) CHECK(v == 0.0);
}

TEST_CASE("conv net backprop matches finite differences") {
    std::vector<ConvLayerDesc> layers = {{2, 2, 3}, {2, 1, 3}};  // 57 parameters
    ConvNetT<double> net(layers, 99);
    REQUIRE(net.parameter_count() == 57);
    const int h = 6, w = 6;
    GaussianRng rng(31);
    std::vector<double> planes(2 * h * w), target(h * w);
    for (double& v : planes) v = 0.5 * rng.gaussian();
    for (double& v : target) v = 0.5 * rng.gaussian();

    std::vector<double> grad(net.parameter_count(), 0.0);
    double loss = net.loss_and_grad(planes, target, h, w, grad);
    CHECK(loss > 0.0);

    auto eval_loss = [&]() {
        std::vector<double> out = net.forward(planes, h, w);
        double acc = 0.0;
        for (size_t i = 0; i < out.size(); ++i) {
            double d = out[i] - target[i];
            acc += d * d;
        }
        return acc / out.size();
    };
    CHECK(eval_loss() == doctest::Approx(loss).epsilon(1e-12));

    const double step = 1e-6;
    for (size_t p = 0; p < net.parameter_count(); ++p) {
        double orig = net.parameters()[p];
        net.parameters()[p] = orig + step;
        double lp = eval_loss();
        net.parameters()[p] = orig - step;
        double lm = eval_loss();
        net.parameters()[p] = orig;
        double fd = (lp - lm) / (2.0 * step);
        double tol = 1e-4 * std::max(1.0, std::abs(fd));
        CHECK(std::abs(grad[p] - fd) < tol);
    }
}

TEST_CASE("training is deterministic and reduces the eps-prediction loss") {
    NoiseSchedule sched(50, 1e-3, 0.05);
    std::vector<Image> data;
    for (int i = 0; i < 4; ++i) data.emplace_back(32, 32, 1, -0.5 + 0.3 * i);

    TrainConfig tc;
    tc.iterations = 300;
    tc.batch_size = 4;
    tc.learning_rate = 0.08;
    tc.seed = 5;

    auto probe_loss = [&](const ConvNetDenoiser& d) {
        GaussianRng rng(777);
        double acc = 0.0;
        int n = 0;
        for (int i = 0; i < 6; ++i) {
            const Image& x0 = data[i % data.size()];
            Image eps = rng.gaussian_image(32, 32, 1);
            int t = 1 + (i * 7) % sched.steps();
            Image x_t = forward_sample(x0, t, eps, sched);
            Image pred = d.predict_eps(x_t, t);
            for (size_t k = 0; k < eps.data.size(); ++k) {
                double dd = pred.data[k] - eps.data[k];
                acc += dd * dd;
                ++n;
            }
        }
        return acc / n;
    };

    TrainConfig tc0 = tc;
    tc0.iterations = 0;
    ConvNetDenoiser init = train_conv_denoiser(data, sched, tc0);
    ConvNetDenoiser trained = train_conv_denoiser(data, sched, tc);
    ConvNetDenoiser trained2 = train_conv_denoiser(data, sched, tc);

    CHECK(trained.net().parameters() == trained2.net().parameters());
    CHECK(probe_loss(trained) < 0.9 * probe_loss(init));
}

TEST_CASE("model serialization round trip") {
    NoiseSchedule sched(20, 1e-3, 0.05);
    std::vector<Image> data{Image(32, 32, 1, 0.2)};
    TrainConfig tc;
    tc.iterations = 3;
    tc.batch_size = 2;
    ConvNetDenoiser d = train_conv_denoiser(data, sched, tc);

    auto path = std::filesystem::temp_directory_path() / "cfdiff_test_model.cfdn";
    save_denoiser(d, path.string());
    ConvNetDenoiser loaded = load_denoiser(path.string());
    std::filesystem::remove(path);

    CHECK(loaded.image_channels() == d.image_channels());
    CHECK(loaded.total_steps() == d.total_steps());
    REQUIRE(loaded.net().parameters().size() == d.net().parameters().size());
    CHECK(loaded.net().parameters() == d.net().parameters());

    GaussianRng rng(6);
    Image x = rng.gaussian_image(16, 16, 1);
    Image a = d.predict_eps(x, 10);
    Image b = loaded.predict_eps(x, 10);
    CHECK(a.data == b.data);
}
