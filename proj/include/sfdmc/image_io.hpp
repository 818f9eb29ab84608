#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfdmc/tensor.hpp"

namespace sfdmc {

// Readers return [h x w x 1] tensors scaled to [0,1]. All failures throw
// DataError naming the offending file. read_image sniffs the magic bytes,
// so a mislabeled extension still loads correctly.
Tensor read_image(const std::string& path);
Tensor read_pgm(const std::string& path);
Tensor read_png(const std::string& path);

// Binary 8-bit PGM (P5). Values are clamped to [0,1] and quantized to 255
// levels on write.
void write_pgm(const std::string& path, const Tensor& img);

namespace detail {

// Minimal PNG writers, mainly for exercising the reader. write_png_gray8
// emits a well-formed 8-bit grayscale file with filter 0 on every row;
// write_png_custom takes pre-filtered scanlines (one filter byte per row
// already included) and arbitrary header fields, which lets tests craft
// color images and specific filter types.
void write_png_gray8(const std::string& path, const std::vector<unsigned char>& pixels, int w,
                     int h);
void write_png_custom(const std::string& path, int w, int h, int color_type, int bit_depth,
                      const std::vector<unsigned char>& filtered_scanlines);

}  // namespace detail

}  // namespace sfdmc
