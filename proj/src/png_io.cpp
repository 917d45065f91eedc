#include "parastitch/png_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <memory>

#include <png.h>

#include "parastitch/error.hpp"

namespace parastitch {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  require(f != nullptr, ErrorCode::kIoError,
          "cannot open " + path.string());
  return f;
}

void silent_warning(png_structp, png_const_charp) {}

struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> data;  // row-major, channels * bytes per sample
};

// Decodes with libpng's setjmp error protocol. Every object with a destructor
// is declared before setjmp so a longjmp never skips one.
bool decode(std::FILE* file, Decoded& out, bool keep_16bit) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                             silent_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    return false;
  }
  png_init_io(png, file);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) {
    if (keep_16bit) {
      png_set_swap(png);  // host order (little endian)
    } else {
      png_set_strip_16(png);
    }
  }
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.data.resize(stride * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.data.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode(std::FILE* file, int width, int height, int color_type,
            int bit_depth, std::vector<png_bytep>& rows) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                              silent_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    return false;
  }
  png_init_io(png, file);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  Decoded d;
  require(decode(file.get(), d, false), ErrorCode::kDecodeError,
          "cannot decode " + path.string());
  Image img(d.width, d.height);
  const bool has_alpha = d.channels == 2 || d.channels == 4;
  const int color_channels = has_alpha ? d.channels - 1 : d.channels;
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      const std::uint8_t* px =
          d.data.data() + (static_cast<std::size_t>(y) * d.width + x) *
                              d.channels;
      for (int c = 0; c < 3; ++c) {
        img.at(x, y, c) = color_channels == 1 ? px[0] : px[c];
      }
      if (has_alpha) img.set_covered(x, y, px[d.channels - 1] >= 128);
    }
  }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& img,
               bool with_alpha) {
  const int channels = with_alpha ? 4 : 3;
  std::vector<std::uint8_t> data(static_cast<std::size_t>(img.width()) *
                                 img.height() * channels);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      std::uint8_t* px =
          data.data() + (static_cast<std::size_t>(y) * img.width() + x) *
                            channels;
      for (int c = 0; c < 3; ++c) px[c] = img.at(x, y, c);
      if (with_alpha) px[3] = img.covered(x, y) ? 255 : 0;
    }
  }
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y) {
    rows[y] = data.data() + static_cast<std::size_t>(y) * img.width() * channels;
  }
  auto file = open_file(path, "wb");
  require(encode(file.get(), img.width(), img.height(),
                 with_alpha ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_RGB, 8,
                 rows),
          ErrorCode::kIoError, "cannot encode " + path.string());
}

Gray16Raster read_png_gray16(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  Decoded d;
  require(decode(file.get(), d, true), ErrorCode::kDecodeError,
          "cannot decode " + path.string());
  require(d.channels == 1, ErrorCode::kDecodeError,
          "label map must be single-channel: " + path.string());
  Gray16Raster r{d.width, d.height,
                 std::vector<std::uint16_t>(static_cast<std::size_t>(d.width) *
                                            d.height)};
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    if (d.bit_depth == 16) {
      r.values[i] = static_cast<std::uint16_t>(d.data[2 * i] |
                                               (d.data[2 * i + 1] << 8));
    } else {
      r.values[i] = d.data[i];
    }
  }
  return r;
}

void write_png_gray16(const std::filesystem::path& path,
                      const Gray16Raster& raster) {
  std::vector<std::uint16_t> data = raster.values;
  std::vector<png_bytep> rows(raster.height);
  for (int y = 0; y < raster.height; ++y) {
    rows[y] = reinterpret_cast<png_bytep>(data.data() +
                                          static_cast<std::size_t>(y) *
                                              raster.width);
  }
  auto file = open_file(path, "wb");
  require(encode(file.get(), raster.width, raster.height, PNG_COLOR_TYPE_GRAY,
                 16, rows),
          ErrorCode::kIoError, "cannot encode " + path.string());
}

}  // namespace parastitch
