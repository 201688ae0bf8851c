#include "cfdiff/imageio.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace cfdiff {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

void write_png_impl(const std::string& path, int h, int w, int channels, int bit_depth,
                    const std::vector<png_bytep>& rows) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("write_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png: libpng error writing " + path);
    }
    png_init_io(png, f.get());
    int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, w, h, bit_depth, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);  // rows are native little-endian
    png_write_image(png, const_cast<png_bytep*>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

struct PngData {
    int h = 0, w = 0, channels = 0, bit_depth = 0;
    std::vector<uint8_t> bytes;  // packed rows
};

PngData read_png_impl(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("read_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: libpng error reading " + path);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);

    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    PngData d;
    d.h = static_cast<int>(png_get_image_height(png, info));
    d.w = static_cast<int>(png_get_image_width(png, info));
    d.channels = png_get_channels(png, info);
    d.bit_depth = png_get_bit_depth(png, info);
    size_t rowbytes = png_get_rowbytes(png, info);
    d.bytes.resize(rowbytes * d.h);
    std::vector<png_bytep> rows(d.h);
    for (int y = 0; y < d.h; ++y) rows[y] = d.bytes.data() + rowbytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return d;
}

}  // namespace

void write_png(const Image& img, const std::string& path) {
    std::vector<uint8_t> bytes(img.size());
    for (size_t i = 0; i < img.size(); ++i) bytes[i] = model_to_u8(img.data[i]);
    std::vector<png_bytep> rows(img.height);
    size_t rowbytes = static_cast<size_t>(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y) rows[y] = bytes.data() + rowbytes * y;
    write_png_impl(path, img.height, img.width, img.channels, 8, rows);
}

Image read_png(const std::string& path) {
    PngData d = read_png_impl(path);
    if (d.bit_depth != 8) throw std::runtime_error("read_png: expected 8-bit PNG: " + path);
    if (d.channels != 1 && d.channels != 3)
        throw std::runtime_error("read_png: expected gray or RGB PNG: " + path);
    Image img(d.h, d.w, d.channels);
    for (size_t i = 0; i < img.size(); ++i) img.data[i] = u8_to_model(d.bytes[i]);
    return img;
}

void write_mask_png(const Mask& mask, const std::string& path) {
    std::vector<uint8_t> bytes(mask.data.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.data[i] ? 255 : 0;
    std::vector<png_bytep> rows(mask.height);
    for (int y = 0; y < mask.height; ++y)
        rows[y] = bytes.data() + static_cast<size_t>(mask.width) * y;
    write_png_impl(path, mask.height, mask.width, 1, 8, rows);
}

Mask read_mask_png(const std::string& path) {
    PngData d = read_png_impl(path);
    if (d.channels != 1 || d.bit_depth != 8)
        throw std::runtime_error("read_mask_png: expected 8-bit grayscale PNG: " + path);
    Mask m(d.h, d.w);
    for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = d.bytes[i] >= 128 ? 1 : 0;
    return m;
}

void write_pfm(const HeatMap& heat, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_pfm: cannot open " + path);
    f << "Pf\n" << heat.width << " " << heat.height << "\n-1.0\n";
    // PFM rows are bottom-to-top
    std::vector<float> row(heat.width);
    for (int y = heat.height - 1; y >= 0; --y) {
        for (int x = 0; x < heat.width; ++x) row[x] = static_cast<float>(heat.at(y, x));
        f.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!f) throw std::runtime_error("write_pfm: write failed for " + path);
}

HeatMap read_pfm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_pfm: cannot open " + path);
    std::string magic;
    int w = 0, h = 0;
    double scale = 0.0;
    f >> magic >> w >> h >> scale;
    if (magic != "Pf" || w <= 0 || h <= 0 || scale >= 0.0)
        throw std::runtime_error("read_pfm: unsupported PFM header in " + path);
    f.get();  // single whitespace after the scale
    HeatMap heat(h, w);
    std::vector<float> row(w);
    for (int y = h - 1; y >= 0; --y) {
        f.read(reinterpret_cast<char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(float)));
        for (int x = 0; x < w; ++x) heat.at(y, x) = row[x];
    }
    if (!f) throw std::runtime_error("read_pfm: truncated data in " + path);
    return heat;
}

void write_heatmap_png16(const HeatMap& heat, const std::string& path) {
    std::vector<uint16_t> vals(heat.data.size());
    for (size_t i = 0; i < vals.size(); ++i) {
        double v = heat.data[i];
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        vals[i] = static_cast<uint16_t>(std::lround(v * 65535.0));
    }
    std::vector<png_bytep> rows(heat.height);
    for (int y = 0; y < heat.height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(vals.data() + static_cast<size_t>(heat.width) * y);
    write_png_impl(path, heat.height, heat.width, 1, 16, rows);
}

}  // namespace cfdiff
