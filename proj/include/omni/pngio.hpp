#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <vector>

#include <png.h>

#include "omni/common.hpp"

namespace omni {

inline void write_png_rgb8(const std::filesystem::path& path, int W, int H,
                           const uint8_t* rgb) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  check(fp != nullptr, ErrorCode::IoError, "cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorCode::IoError, "png write failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<size_t>(H));
  for (int r = 0; r < H; ++r)
    rows[static_cast<size_t>(r)] =
        const_cast<png_bytep>(rgb + static_cast<size_t>(r) * W * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

inline std::vector<uint8_t> read_png_rgb8(const std::filesystem::path& path, int& W,
                                          int& H) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  check(fp != nullptr, ErrorCode::IoError, "cannot open: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                           nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorCode::IoError, "png read failed: " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  // normalize any input to 8-bit RGB
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  W = static_cast<int>(png_get_image_width(png, info));
  H = static_cast<int>(png_get_image_height(png, info));
  check(png_get_rowbytes(png, info) == static_cast<size_t>(W) * 3, ErrorCode::IoError,
        "unexpected png row layout: " + path.string());
  std::vector<uint8_t> out(static_cast<size_t>(W) * H * 3);
  std::vector<png_bytep> rows(static_cast<size_t>(H));
  for (int r = 0; r < H; ++r)
    rows[static_cast<size_t>(r)] = out.data() + static_cast<size_t>(r) * W * 3;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return out;
}

}  // namespace omni
