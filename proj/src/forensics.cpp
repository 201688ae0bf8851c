#include "cfdiff/forensics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "cfdiff/dct.hpp"

namespace cfdiff {

namespace {

constexpr double kNearZeroThreshold = 0.5;  // half a quantization step at quality 1, 8-bit units

int reflect(int i, int n) {
    if (i < 0) return -i - 1;
    if (i >= n) return 2 * n - 1 - i;
    return i;
}

// Bilinear upsampling of a window-center grid to pixel resolution, constant
// beyond the border centers.
HeatMap upsample_grid(const std::vector<double>& vals, int nwy, int nwx, int center0, int stride,
                      int h, int w) {
    HeatMap heat(h, w);
    for (int y = 0; y < h; ++y) {
        double fy = (static_cast<double>(y) - center0) / stride;
        int iy = static_cast<int>(std::floor(fy));
        double ty = fy - iy;
        if (iy < 0) { iy = 0; ty = 0.0; }
        if (iy >= nwy - 1) { iy = nwy > 1 ? nwy - 2 : 0; ty = nwy > 1 ? 1.0 : 0.0; }
        int iy1 = nwy > 1 ? iy + 1 : iy;
        for (int x = 0; x < w; ++x) {
            double fx = (static_cast<double>(x) - center0) / stride;
            int ix = static_cast<int>(std::floor(fx));
            double tx = fx - ix;
            if (ix < 0) { ix = 0; tx = 0.0; }
            if (ix >= nwx - 1) { ix = nwx > 1 ? nwx - 2 : 0; tx = nwx > 1 ? 1.0 : 0.0; }
            int ix1 = nwx > 1 ? ix + 1 : ix;
            double v00 = vals[static_cast<size_t>(iy) * nwx + ix];
            double v01 = vals[static_cast<size_t>(iy) * nwx + ix1];
            double v10 = vals[static_cast<size_t>(iy1) * nwx + ix];
            double v11 = vals[static_cast<size_t>(iy1) * nwx + ix1];
            double v = (1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11);
            heat.at(y, x) = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        }
    }
    return heat;
}

// Majority vote with ties broken toward the smallest index.
int majority(const std::vector<int>& votes, int n_candidates) {
    std::vector<int> counts(n_candidates, 0);
    for (int v : votes) counts[v]++;
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

// Margin of the winning candidate over the majority candidate, normalized by
// the majority candidate's own excess over the weakest candidate. A window
// that merely out-votes the majority by chance scores near zero; a window
// whose majority-origin evidence collapses to the floor scores near one.
// Zero when the window agrees with the majority or all scores tie.
double disagreement_margin(const std::vector<double>& scores, int best, int global) {
    if (best == global) return 0.0;
    double lo = *std::min_element(scores.begin(), scores.end());
    if (scores[best] <= lo) return 0.0;
    double m = (scores[best] - scores[global]) / (scores[global] - lo + 1e-9);
    return m < 0.0 ? 0.0 : (m > 1.0 ? 1.0 : m);
}

// High-pass residual: v - 4-neighbor mean, per channel plane.
std::vector<double> highpass_residual(const Image& img, int c) {
    int h = img.height, w = img.width;
    std::vector<double> r(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double nb = img.at(reflect(y - 1, h), x, c) + img.at(reflect(y + 1, h), x, c) +
                        img.at(y, reflect(x - 1, w), c) + img.at(y, reflect(x + 1, w), c);
            r[static_cast<size_t>(y) * w + x] = img.at(y, x, c) - 0.25 * nb;
        }
    return r;
}

}  // namespace

HeatMap detect_grid(const Image& image) {
    constexpr int W = 64, stride = 8;
    if (image.height < W || image.width < W)
        throw std::invalid_argument("detect_grid: image smaller than one 64x64 window");
    const int h = image.height, w = image.width;

    // 8-bit luma
    std::vector<double> luma(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int c = 0; c < image.channels; ++c) acc += image.at(y, x, c);
            luma[static_cast<size_t>(y) * w + x] = (acc / image.channels + 1.0) * 127.5;
        }

    // near-zero AC counts per candidate origin, per block
    struct OriginGrid {
        int nby, nbx;
        std::vector<int> zeros;  // [by][bx]
    };
    std::vector<OriginGrid> grids(64);
    double block[64], coef[64];
    for (int oy = 0; oy < 8; ++oy)
        for (int ox = 0; ox < 8; ++ox) {
            OriginGrid& g = grids[oy * 8 + ox];
            g.nby = (h - oy) / 8;
            g.nbx = (w - ox) / 8;
            g.zeros.assign(static_cast<size_t>(g.nby) * g.nbx, 0);
            for (int by = 0; by < g.nby; ++by)
                for (int bx = 0; bx < g.nbx; ++bx) {
                    for (int y = 0; y < 8; ++y)
                        for (int x = 0; x < 8; ++x)
                            block[y * 8 + x] =
                                luma[static_cast<size_t>(oy + by * 8 + y) * w + ox + bx * 8 + x];
                    dct8x8(block, coef);
                    int z = 0;
                    for (int i = 1; i < 64; ++i)  // AC only
                        if (std::abs(coef[i]) < kNearZeroThreshold) ++z;
                    g.zeros[static_cast<size_t>(by) * g.nbx + bx] = z;
                }
        }

    const int nwy = (h - W) / stride + 1;
    const int nwx = (w - W) / stride + 1;
    std::vector<std::vector<double>> window_scores(static_cast<size_t>(nwy) * nwx);
    std::vector<int> best(static_cast<size_t>(nwy) * nwx);
    for (int wy = 0; wy < nwy; ++wy)
        for (int wx = 0; wx < nwx; ++wx) {
            int y0 = wy * stride, x0 = wx * stride;
            std::vector<double> scores(64, 0.0);
            for (int o = 0; o < 64; ++o) {
                int oy = o / 8, ox = o % 8;
                const OriginGrid& g = grids[o];
                int by0 = (y0 - oy + 7) / 8;
                if (by0 < 0) by0 = 0;
                int bx0 = (x0 - ox + 7) / 8;
                if (bx0 < 0) bx0 = 0;
                double acc = 0.0;
                for (int by = by0; by < g.nby && oy + by * 8 + 8 <= y0 + W; ++by)
                    for (int bx = bx0; bx < g.nbx && ox + bx * 8 + 8 <= x0 + W; ++bx)
                        acc += g.zeros[static_cast<size_t>(by) * g.nbx + bx];
                scores[o] = acc;
            }
            size_t wi = static_cast<size_t>(wy) * nwx + wx;
            best[wi] = static_cast<int>(std::max_element(scores.begin(), scores.end()) -
                                        scores.begin());
            window_scores[wi] = std::move(scores);
        }

    // Evidence gate: a window only gets a say if its best origin clearly
    // beats the median origin. Ungated, trace-free content (white noise,
    // never-compressed images) would vote on counting noise alone; the
    // 0.35 floor is the empirical contrast of traceless content.
    std::vector<double> confidence(best.size());
    for (size_t i = 0; i < best.size(); ++i) {
        std::vector<double> sorted = window_scores[i];
        std::nth_element(sorted.begin(), sorted.begin() + 32, sorted.end());
        double med = sorted[32];
        double contrast = (window_scores[i][best[i]] - med) / (med + 1.0);
        confidence[i] = std::clamp((contrast - 0.35) / 0.15, 0.0, 1.0);
    }

    // Grid inconsistency is only meaningful when the image has a dominant
    // grid at all. In traceless content the per-window best origins are
    // uniform over the 64 candidates and the majority share collapses.
    int global = majority(best, 64);
    int agree = 0;
    for (int b : best)
        if (b == global) ++agree;
    double share = static_cast<double>(agree) / static_cast<double>(best.size());
    double image_conf = std::clamp((share - 0.25) / 0.5, 0.0, 1.0);

    std::vector<double> vals(best.size());
    for (size_t i = 0; i < best.size(); ++i)
        vals[i] =
            image_conf * confidence[i] * disagreement_margin(window_scores[i], best[i], global);

    // A dissenting window is evidence for its whole 64x64 support, not just
    // its center (a spliced region no bigger than one window would otherwise
    // shrink to a point); spread each vote over the window extent by max.
    const int r = W / (2 * stride);
    std::vector<double> spread(vals.size());
    for (int wy = 0; wy < nwy; ++wy)
        for (int wx = 0; wx < nwx; ++wx) {
            double m = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    int yy = wy + dy, xx = wx + dx;
                    if (yy < 0 || yy >= nwy || xx < 0 || xx >= nwx) continue;
                    m = std::max(m, vals[static_cast<size_t>(yy) * nwx + xx]);
                }
            spread[static_cast<size_t>(wy) * nwx + wx] = m;
        }
    return upsample_grid(spread, nwy, nwx, W / 2, stride, h, w);
}

HeatMap detect_variance(const Image& image) {
    constexpr int W = 32, stride = 16;
    if (image.height < W || image.width < W)
        throw std::invalid_argument("detect_variance: image smaller than one 32x32 window");
    const int h = image.height, w = image.width;
    const int C = image.channels;

    std::vector<std::vector<double>> residuals(C);
    for (int c = 0; c < C; ++c) residuals[c] = highpass_residual(image, c);

    const int nwy = (h - W) / stride + 1;
    const int nwx = (w - W) / stride + 1;
    std::vector<std::vector<double>> window_scores(static_cast<size_t>(nwy) * nwx);
    std::vector<int> best(static_cast<size_t>(nwy) * nwx);

    for (int wy = 0; wy < nwy; ++wy)
        for (int wx = 0; wx < nwx; ++wx) {
            int y0 = wy * stride, x0 = wx * stride;
            // mean-square residual per channel and 2x2 parity class
            double m2[3][2][2] = {};
            int cnt[2][2] = {};
            for (int y = y0; y < y0 + W; ++y)
                for (int x = x0; x < x0 + W; ++x) {
                    int py = y & 1, px = x & 1;
                    for (int c = 0; c < C; ++c) {
                        double r = residuals[c][static_cast<size_t>(y) * w + x];
                        m2[c][py][px] += r * r;
                    }
                    cnt[py][px]++;
                }
            for (int c = 0; c < C; ++c)
                for (int py = 0; py < 2; ++py)
                    for (int px = 0; px < 2; ++px)
                        if (cnt[py][px]) m2[c][py][px] /= cnt[py][px];

            // Sampled (non-interpolated) positions keep more residual energy.
            // Under RGGB phase (py,px): R sits on class (py,px), B on the
            // opposite class, G on the two mixed classes.
            std::vector<double> scores(4, 0.0);
            for (int p = 0; p < 4; ++p) {
                int py = p >> 1, px = p & 1;
                double s = m2[0][py][px] + (C == 3 ? m2[2][py ^ 1][px ^ 1] : 0.0);
                if (C == 3) s += m2[1][py][px ^ 1] + m2[1][py ^ 1][px];
                scores[p] = s;
            }
            size_t wi = static_cast<size_t>(wy) * nwx + wx;
            best[wi] = static_cast<int>(std::max_element(scores.begin(), scores.end()) -
                                        scores.begin());
            window_scores[wi] = std::move(scores);
        }

    int global = majority(best, 4);
    std::vector<double> vals(best.size());
    for (size_t i = 0; i < best.size(); ++i)
        vals[i] = disagreement_margin(window_scores[i], best[i], global);
    return upsample_grid(vals, nwy, nwx, W / 2, stride, h, w);
}

HeatMap detect_residual(const Image& image) {
    constexpr int W = 32, stride = 16;
    if (image.height < W || image.width < W)
        throw std::invalid_argument("detect_residual: image smaller than one 32x32 window");
    const int h = image.height, w = image.width;
    const int C = image.channels;

    std::vector<std::vector<double>> residuals(C);
    for (int c = 0; c < C; ++c) residuals[c] = highpass_residual(image, c);

    const int nwy = (h - W) / stride + 1;
    const int nwx = (w - W) / stride + 1;
    std::vector<double> sigma(static_cast<size_t>(nwy) * nwx);
    std::vector<double> buf;
    buf.reserve(static_cast<size_t>(W) * W * C);
    for (int wy = 0; wy < nwy; ++wy)
        for (int wx = 0; wx < nwx; ++wx) {
            buf.clear();
            for (int c = 0; c < C; ++c)
                for (int y = wy * stride; y < wy * stride + W; ++y)
                    for (int x = wx * stride; x < wx * stride + W; ++x)
                        buf.push_back(std::abs(residuals[c][static_cast<size_t>(y) * w + x]));
            auto mid = buf.begin() + buf.size() / 2;
            std::nth_element(buf.begin(), mid, buf.end());
            sigma[static_cast<size_t>(wy) * nwx + wx] = 1.4826 * *mid;
        }

    std::vector<double> sorted = sigma;
    auto mid = sorted.begin() + sorted.size() / 2;
    std::nth_element(sorted.begin(), mid, sorted.end());
    double med = *mid;

    std::vector<double> vals(sigma.size());
    for (size_t i = 0; i < sigma.size(); ++i) {
        double v = std::abs(sigma[i] - med) / (med + 1e-6);
        vals[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    return upsample_grid(vals, nwy, nwx, W / 2, stride, h, w);
}

DetectorFn detector_by_name(const std::string& name) {
    if (name == "grid") return &detect_grid;
    if (name == "variance") return &detect_variance;
    if (name == "residual") return &detect_residual;
    throw std::invalid_argument("unknown detector: " + name);
}

const std::vector<std::string>& all_detector_names() {
    static const std::vector<std::string> names = {"grid", "variance", "residual"};
    return names;
}

}  // namespace cfdiff
