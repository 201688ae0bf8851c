#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfdiff {

// H x W x C raster in model range [-1, 1], row-major, channel-interleaved.
// Values are not clamped on construction; purification clamps before export.
struct Image {
    int height = 0;
    int width  = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<size_t>(h) * w * c, fill) {
        if (h <= 0 || w <= 0 || (c != 1 && c != 3))
            throw std::invalid_argument("Image: bad dimensions " + std::to_string(h) + "x" +
                                        std::to_string(w) + "x" + std::to_string(c));
    }

    size_t size() const { return data.size(); }

    double& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

inline void require_same_shape(const Image& a, const Image& b, const char* where) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(where) + ": shape mismatch");
}

inline Image clamp_unit(Image img) {
    for (double& v : img.data) v = v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v);
    return img;
}

// Mapping between model range [-1,1] and 8-bit storage: v = 2*(u/255) - 1.
// Export rounds half away from zero.
inline uint8_t model_to_u8(double v) {
    double u = (v + 1.0) * 0.5 * 255.0;
    if (u < 0.0) u = 0.0;
    if (u > 255.0) u = 255.0;
    double r = u >= 0.0 ? std::floor(u + 0.5) : std::ceil(u - 0.5);
    return static_cast<uint8_t>(r);
}

inline double u8_to_model(uint8_t u) { return 2.0 * (static_cast<double>(u) / 255.0) - 1.0; }

// [-1,1] -> [0,1]; used for PSNR/SSIM scoring of stored images.
inline Image to_unit_range(const Image& img) {
    Image out = img;
    for (double& v : out.data) {
        v = (v + 1.0) * 0.5;
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    return out;
}

}  // namespace cfdiff
