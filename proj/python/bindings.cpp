#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cfdiff/denoiser.hpp"
#include "cfdiff/diffusion.hpp"
#include "cfdiff/forensics.hpp"
#include "cfdiff/forgerylab.hpp"
#include "cfdiff/guidance.hpp"
#include "cfdiff/metrics.hpp"
#include "cfdiff/schedule.hpp"

namespace py = pybind11;
using namespace cfdiff;

namespace {

Image to_image(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() == 2) {
        Image img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)), 1);
        std::copy(arr.data(), arr.data() + img.size(), img.data.begin());
        return img;
    }
    if (arr.ndim() == 3 && arr.shape(2) == 3) {
        Image img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)), 3);
        std::copy(arr.data(), arr.data() + img.size(), img.data.begin());
        return img;
    }
    throw std::invalid_argument("expected a (H, W) or (H, W, 3) array");
}

py::array_t<double> from_image(const Image& img) {
    py::array_t<double> arr(img.channels == 1
                                ? std::vector<py::ssize_t>{img.height, img.width}
                                : std::vector<py::ssize_t>{img.height, img.width, img.channels});
    std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
    return arr;
}

py::array_t<double> from_heatmap(const HeatMap& h) {
    py::array_t<double> arr(std::vector<py::ssize_t>{h.height, h.width});
    std::copy(h.data.begin(), h.data.end(), arr.mutable_data());
    return arr;
}

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Denoiser plus the schedule it was trained against.
struct Model {
    ConvNetDenoiser denoiser;
    NoiseSchedule schedule;

    py::array_t<double> purify_array(const DoubleArray& x, int t_star, bool guided, double scale,
                                     const std::string& metric, uint64_t seed) {
        PurifyConfig pc;
        pc.t_star = t_star;
        pc.guided = guided;
        pc.scale = scale;
        pc.metric = parse_metric(metric);
        pc.seed = seed;
        return from_image(purify(to_image(x), denoiser, schedule, pc));
    }
};

}  // namespace

PYBIND11_MODULE(_cfdiff, m) {
    m.doc() = "diffusion purification counter-forensics lab";

    m.def(
        "ssim",
        [](const DoubleArray& x, const DoubleArray& y, double dynamic_range) {
            SsimParams p;
            p.dynamic_range = dynamic_range;
            return ssim(to_image(x), to_image(y), p);
        },
        py::arg("x"), py::arg("y"), py::arg("dynamic_range") = 2.0);

    m.def(
        "psnr",
        [](const DoubleArray& x, const DoubleArray& y, double peak, double cap) {
            return psnr(to_image(x), to_image(y), peak, cap);
        },
        py::arg("x"), py::arg("y"), py::arg("peak") = 1.0, py::arg("cap") = 80.0);

    m.def(
        "detect",
        [](const std::string& name, const DoubleArray& image) {
            return from_heatmap(detector_by_name(name)(to_image(image)));
        },
        py::arg("name"), py::arg("image"), "Run a trace detector (grid | variance | residual)");

    m.def("detector_names", [] { return all_detector_names(); });

    m.def(
        "synth_clean",
        [](uint64_t seed, int size, int bayer_phase, bool quantize, double quality,
           double noise_std) {
            PipelineParams p{bayer_phase, quantize, quality, noise_std, 0};
            return from_image(synth_clean(seed, size, p));
        },
        py::arg("seed"), py::arg("size"), py::arg("bayer_phase") = 0, py::arg("quantize") = true,
        py::arg("quality") = 0.2, py::arg("noise_std") = 0.02);

    m.def(
        "median_purify",
        [](const DoubleArray& x, int kernel) { return from_image(median_purify(to_image(x), kernel)); },
        py::arg("x"), py::arg("kernel") = 3);

    m.def(
        "forward_sample",
        [](const DoubleArray& x0, int t, const DoubleArray& eps, int T, double beta_start,
           double beta_end) {
            NoiseSchedule s(T, beta_start, beta_end);
            return from_image(forward_sample(to_image(x0), t, to_image(eps), s));
        },
        py::arg("x0"), py::arg("t"), py::arg("eps"), py::arg("T") = kDefaultSteps,
        py::arg("beta_start") = kDefaultBetaStart, py::arg("beta_end") = kDefaultBetaEnd);

    py::class_<Model>(m, "Model")
        .def_property_readonly("total_steps",
                               [](const Model& m_) { return m_.denoiser.total_steps(); })
        .def_property_readonly("channels",
                               [](const Model& m_) { return m_.denoiser.image_channels(); })
        .def("purify", &Model::purify_array, py::arg("x"), py::arg("t_star") = 40,
             py::arg("guided") = false, py::arg("scale") = 1e6, py::arg("metric") = "ssim",
             py::arg("seed") = 0)
        .def("save", [](const Model& m_, const std::string& path) {
            save_denoiser(m_.denoiser, path);
        });

    m.def(
        "load_model",
        [](const std::string& path, double beta_start, double beta_end) {
            ConvNetDenoiser d = load_denoiser(path);
            NoiseSchedule s(d.total_steps(), beta_start, beta_end);
            return Model{std::move(d), std::move(s)};
        },
        py::arg("path"), py::arg("beta_start") = kDefaultBetaStart,
        py::arg("beta_end") = kDefaultBetaEnd);

    m.def(
        "train_model",
        [](const std::vector<DoubleArray>& images, int T, double beta_start, double beta_end,
           int iterations, int batch_size, double learning_rate, uint64_t seed, int patch) {
            std::vector<Image> data;
            data.reserve(images.size());
            for (const auto& a : images) data.push_back(to_image(a));
            NoiseSchedule s(T, beta_start, beta_end);
            TrainConfig tc;
            tc.iterations = iterations;
            tc.batch_size = batch_size;
            tc.learning_rate = learning_rate;
            tc.seed = seed;
            tc.patch = patch;
            ConvNetDenoiser d = train_conv_denoiser(data, s, tc);
            return Model{std::move(d), std::move(s)};
        },
        py::arg("images"), py::arg("T") = kDefaultSteps, py::arg("beta_start") = kDefaultBetaStart,
        py::arg("beta_end") = kDefaultBetaEnd, py::arg("iterations") = 4000,
        py::arg("batch_size") = 8, py::arg("learning_rate") = 0.08, py::arg("seed") = 1,
        py::arg("patch") = 32);
}
