#include "cfdiff/guidance.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cfdiff {

namespace {

std::vector<double> gaussian_kernel(int size, double sigma) {
    std::vector<double> k(size);
    double sum = 0.0;
    double c = (size - 1) * 0.5;
    for (int i = 0; i < size; ++i) {
        k[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

// One channel plane extracted from an interleaved image.
std::vector<double> extract_plane(const Image& img, int c) {
    std::vector<double> p(static_cast<size_t>(img.height) * img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            p[static_cast<size_t>(y) * img.width + x] = img.at(y, x, c);
    return p;
}

// Separable valid correlation: (H,W) -> (H-k+1, W-k+1).
std::vector<double> valid_filter(const std::vector<double>& in, int h, int w,
                                 const std::vector<double>& kern) {
    int k = static_cast<int>(kern.size());
    int wo = w - k + 1;
    int ho = h - k + 1;
    std::vector<double> tmp(static_cast<size_t>(h) * wo);
    for (int y = 0; y < h; ++y) {
        const double* row = &in[static_cast<size_t>(y) * w];
        double* orow = &tmp[static_cast<size_t>(y) * wo];
        for (int x = 0; x < wo; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += kern[i] * row[x + i];
            orow[x] = acc;
        }
    }
    std::vector<double> out(static_cast<size_t>(ho) * wo);
    for (int x = 0; x < wo; ++x) {
        for (int y = 0; y < ho; ++y) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += kern[i] * tmp[static_cast<size_t>(y + i) * wo + x];
            out[static_cast<size_t>(y) * wo + x] = acc;
        }
    }
    return out;
}

// Adjoint of valid_filter: scatters a window-position map back to pixels,
// (H-k+1, W-k+1) -> (H, W).
std::vector<double> valid_filter_adjoint(const std::vector<double>& in, int ho, int wo,
                                         const std::vector<double>& kern) {
    int k = static_cast<int>(kern.size());
    int h = ho + k - 1;
    int w = wo + k - 1;
    std::vector<double> tmp(static_cast<size_t>(ho) * w, 0.0);
    for (int y = 0; y < ho; ++y) {
        const double* row = &in[static_cast<size_t>(y) * wo];
        double* orow = &tmp[static_cast<size_t>(y) * w];
        for (int x = 0; x < wo; ++x) {
            double v = row[x];
            for (int i = 0; i < k; ++i) orow[x + i] += kern[i] * v;
        }
    }
    std::vector<double> out(static_cast<size_t>(h) * w, 0.0);
    for (int y = 0; y < ho; ++y) {
        const double* row = &tmp[static_cast<size_t>(y) * w];
        for (int i = 0; i < k; ++i) {
            double kv = kern[i];
            double* orow = &out[static_cast<size_t>(y + i) * w];
            for (int x = 0; x < w; ++x) orow[x] += kv * row[x];
        }
    }
    return out;
}

struct SsimMaps {
    int ho, wo;
    std::vector<double> mu_x, mu_y, var_x, var_y, cov_xy;
};

SsimMaps ssim_maps(const std::vector<double>& px, const std::vector<double>& py, int h, int w,
                   const std::vector<double>& kern) {
    SsimMaps m;
    int k = static_cast<int>(kern.size());
    m.ho = h - k + 1;
    m.wo = w - k + 1;
    size_t n = px.size();
    std::vector<double> xx(n), yy(n), xy(n);
    for (size_t i = 0; i < n; ++i) {
        xx[i] = px[i] * px[i];
        yy[i] = py[i] * py[i];
        xy[i] = px[i] * py[i];
    }
    m.mu_x = valid_filter(px, h, w, kern);
    m.mu_y = valid_filter(py, h, w, kern);
    m.var_x = valid_filter(xx, h, w, kern);
    m.var_y = valid_filter(yy, h, w, kern);
    m.cov_xy = valid_filter(xy, h, w, kern);
    for (size_t i = 0; i < m.mu_x.size(); ++i) {
        m.var_x[i] -= m.mu_x[i] * m.mu_x[i];
        m.var_y[i] -= m.mu_y[i] * m.mu_y[i];
        m.cov_xy[i] -= m.mu_x[i] * m.mu_y[i];
    }
    return m;
}

void check_ssim_inputs(const Image& x, const Image& y, const SsimParams& p) {
    require_same_shape(x, y, "ssim");
    if (x.height < p.window || x.width < p.window)
        throw std::invalid_argument("ssim: image smaller than the SSIM window");
    if (p.k1 <= 0.0 || p.k2 <= 0.0 || p.window < 1 || p.sigma <= 0.0)
        throw std::invalid_argument("ssim: invalid parameters");
}

}  // namespace

double ssim(const Image& x, const Image& y, const SsimParams& params) {
    check_ssim_inputs(x, y, params);
    const double c1 = params.k1 * params.dynamic_range * params.k1 * params.dynamic_range;
    const double c2 = params.k2 * params.dynamic_range * params.k2 * params.dynamic_range;
    auto kern = gaussian_kernel(params.window, params.sigma);

    double total = 0.0;
    size_t count = 0;
    for (int c = 0; c < x.channels; ++c) {
        auto px = extract_plane(x, c);
        auto py = extract_plane(y, c);
        SsimMaps m = ssim_maps(px, py, x.height, x.width, kern);
        for (size_t i = 0; i < m.mu_x.size(); ++i) {
            double a1 = 2.0 * m.mu_x[i] * m.mu_y[i] + c1;
            double a2 = 2.0 * m.cov_xy[i] + c2;
            double b1 = m.mu_x[i] * m.mu_x[i] + m.mu_y[i] * m.mu_y[i] + c1;
            double b2 = m.var_x[i] + m.var_y[i] + c2;
            total += (a1 * a2) / (b1 * b2);
        }
        count += m.mu_x.size();
    }
    return total / static_cast<double>(count);
}

Image ssim_gradient(const Image& x, const Image& y, const SsimParams& params) {
    check_ssim_inputs(x, y, params);
    const double c1 = params.k1 * params.dynamic_range * params.k1 * params.dynamic_range;
    const double c2 = params.k2 * params.dynamic_range * params.k2 * params.dynamic_range;
    auto kern = gaussian_kernel(params.window, params.sigma);

    Image grad(x.height, x.width, x.channels, 0.0);
    size_t windows_per_channel =
        static_cast<size_t>(x.height - params.window + 1) * (x.width - params.window + 1);
    double norm = 1.0 / (static_cast<double>(windows_per_channel) * x.channels);

    for (int c = 0; c < x.channels; ++c) {
        auto px = extract_plane(x, c);
        auto py = extract_plane(y, c);
        SsimMaps m = ssim_maps(px, py, x.height, x.width, kern);
        size_t n = m.mu_x.size();
        // Per-window coefficients of dS/dx_i = w * (g0 + g1*x_i + g2*y_i):
        //   dS/dmu_x   = S*(2mu_y/A1 - 2mu_x/B1)
        //   dS/dvar_x  = -S/B2          (var term contributes 2w(x_i - mu_x))
        //   dS/dcov_xy = 2A1/(B1B2)     (cov term contributes w(y_i - mu_y))
        std::vector<double> g0(n), g1(n), g2(n);
        for (size_t i = 0; i < n; ++i) {
            double mx = m.mu_x[i], my = m.mu_y[i];
            double a1 = 2.0 * mx * my + c1;
            double a2 = 2.0 * m.cov_xy[i] + c2;
            double b1 = mx * mx + my * my + c1;
            double b2 = m.var_x[i] + m.var_y[i] + c2;
            double s = (a1 * a2) / (b1 * b2);
            double d_mu = s * (2.0 * my / a1 - 2.0 * mx / b1);
            double d_var = -s / b2;
            double d_cov = 2.0 * a1 / (b1 * b2);
            g0[i] = d_mu - 2.0 * d_var * mx - d_cov * my;
            g1[i] = 2.0 * d_var;
            g2[i] = d_cov;
        }
        auto s0 = valid_filter_adjoint(g0, m.ho, m.wo, kern);
        auto s1 = valid_filter_adjoint(g1, m.ho, m.wo, kern);
        auto s2 = valid_filter_adjoint(g2, m.ho, m.wo, kern);
        for (int yy = 0; yy < x.height; ++yy)
            for (int xx = 0; xx < x.width; ++xx) {
                size_t i = static_cast<size_t>(yy) * x.width + xx;
                grad.at(yy, xx, c) = norm * (s0[i] + s1[i] * px[i] + s2[i] * py[i]);
            }
    }
    return grad;
}

double metric_value(const GuidanceMetric& metric, const Image& x, const Image& x_in) {
    require_same_shape(x, x_in, "metric_value");
    if (metric.kind == MetricKind::Mse) {
        double acc = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            double d = x.data[i] - x_in.data[i];
            acc += d * d;
        }
        return acc / static_cast<double>(x.size());
    }
    return -ssim(x, x_in, metric.ssim_params);
}

Image metric_gradient(const GuidanceMetric& metric, const Image& x, const Image& x_in) {
    require_same_shape(x, x_in, "metric_gradient");
    if (metric.kind == MetricKind::Mse) {
        Image g(x.height, x.width, x.channels);
        double scale = 2.0 / static_cast<double>(x.size());
        for (size_t i = 0; i < x.size(); ++i) g.data[i] = scale * (x.data[i] - x_in.data[i]);
        return g;
    }
    Image g = ssim_gradient(x, x_in, metric.ssim_params);
    for (double& v : g.data) v = -v;
    return g;
}

GuidanceMetric parse_metric(const std::string& name) {
    if (name == "ssim") return GuidanceMetric{MetricKind::NegSsim, {}};
    if (name == "mse") return GuidanceMetric{MetricKind::Mse, {}};
    throw std::invalid_argument("unknown guidance metric: " + name);
}

}  // namespace cfdiff
