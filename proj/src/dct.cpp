#include "cfdiff/dct.hpp"

#include <cmath>
#include <stdexcept>

namespace cfdiff {

namespace {

struct DctBasis {
    double c[8][8];  // c[k][n] = s_k * cos(pi (2n+1) k / 16)
    DctBasis() {
        for (int k = 0; k < 8; ++k) {
            double s = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int n = 0; n < 8; ++n)
                c[k][n] = s * std::cos(M_PI * (2 * n + 1) * k / 16.0);
        }
    }
};

const DctBasis& basis() {
    static const DctBasis b;
    return b;
}

}  // namespace

void dct8x8(const double* in, double* out) {
    const auto& b = basis();
    double tmp[64];
    for (int y = 0; y < 8; ++y)
        for (int k = 0; k < 8; ++k) {
            double acc = 0.0;
            for (int n = 0; n < 8; ++n) acc += b.c[k][n] * in[y * 8 + n];
            tmp[y * 8 + k] = acc;
        }
    for (int x = 0; x < 8; ++x)
        for (int k = 0; k < 8; ++k) {
            double acc = 0.0;
            for (int n = 0; n < 8; ++n) acc += b.c[k][n] * tmp[n * 8 + x];
            out[k * 8 + x] = acc;
        }
}

void idct8x8(const double* in, double* out) {
    const auto& b = basis();
    double tmp[64];
    for (int k = 0; k < 8; ++k)
        for (int n = 0; n < 8; ++n) {
            double acc = 0.0;
            for (int j = 0; j < 8; ++j) acc += b.c[j][n] * in[k * 8 + j];
            tmp[k * 8 + n] = acc;
        }
    for (int x = 0; x < 8; ++x)
        for (int n = 0; n < 8; ++n) {
            double acc = 0.0;
            for (int j = 0; j < 8; ++j) acc += b.c[j][n] * tmp[j * 8 + x];
            out[n * 8 + x] = acc;
        }
}

void quantize_blocks(Image& img, double quality, int origin_y, int origin_x) {
    if (!(quality > 0.0 && quality <= 1.0))
        throw std::invalid_argument("quantize_blocks: quality must be in (0, 1]");
    double step = 1.0 / quality;  // in 8-bit units
    double block[64], coef[64];
    for (int c = 0; c < img.channels; ++c)
        for (int by = origin_y; by + 8 <= img.height; by += 8)
            for (int bx = origin_x; bx + 8 <= img.width; bx += 8) {
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x)
                        block[y * 8 + x] = (img.at(by + y, bx + x, c) + 1.0) * 127.5 - 128.0;
                dct8x8(block, coef);
                for (double& v : coef) v = std::round(v / step) * step;
                idct8x8(coef, block);
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x)
                        img.at(by + y, bx + x, c) = (block[y * 8 + x] + 128.0) / 127.5 - 1.0;
            }
}

}  // namespace cfdiff
