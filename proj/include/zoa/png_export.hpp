#pragma once

// 8-bit PNG export for visual inspection. Lossy and write-only.

#include "zoa/core.hpp"

#include <png.h>

#include <algorithm>
#include <cfenv>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace zoa::io {

/// Maps [0,1] to 0..255 with round-half-even; out-of-range values saturate.
inline unsigned char to_byte(double v) {
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  double r = std::nearbyint(std::clamp(v, 0.0, 1.0) * 255.0);
  std::fesetround(saved);
  return static_cast<unsigned char>(r);
}

inline void write_png(const std::string& path, const Vec& pixels, const ImageShape& shape) {
  if (pixels.size() != shape.size()) throw Error("PNG export: shape does not match vector length");
  int color_type = 0;
  switch (shape.channels) {
  case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
  case 3: color_type = PNG_COLOR_TYPE_RGB; break;
  case 4: color_type = PNG_COLOR_TYPE_RGBA; break;
  default: throw Error("PNG export supports 1, 3 or 4 channels");
  }

  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw Error("cannot open for writing: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }

  std::vector<unsigned char> row_bytes(static_cast<std::size_t>(shape.width * shape.channels));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG write failed: " + path);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(shape.width), static_cast<png_uint_32>(shape.height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (Eigen::Index r = 0; r < shape.height; ++r) {
    for (Eigen::Index k = 0; k < shape.width * shape.channels; ++k)
      row_bytes[static_cast<std::size_t>(k)] = to_byte(pixels[r * shape.width * shape.channels + k]);
    png_write_row(png, row_bytes.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

} // namespace zoa::io
