#pragma once

#include "cfdiff/image.hpp"

namespace cfdiff {

/// Orthonormal 8x8 DCT-II of one block (row-major, in != out allowed).
void dct8x8(const double* in, double* out);
void idct8x8(const double* in, double* out);

/// JPEG-like uniform quantization of 8x8 block-DCT coefficients, in place.
/// Values are mapped to 8-bit units (0..255) first; the quantizer step is
/// 1/quality in those units. The grid is anchored at (origin_y, origin_x);
/// partial border blocks are left untouched.
void quantize_blocks(Image& img, double quality, int origin_y, int origin_x);

}  // namespace cfdiff
