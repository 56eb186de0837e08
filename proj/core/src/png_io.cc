#include "objmap/png_io.h"

#include <png.h>

#include <bit>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace objmap {
namespace {

struct FileCloser {
  void operator()(std::FILE* file) const { std::fclose(file); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  return FilePtr(std::fopen(path.c_str(), mode));
}

void warn_silently(png_structp, png_const_charp) {}

}  // namespace

Image<std::uint16_t> read_png16(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  if (!file) {
    throw ParseError("cannot open PNG file " + path.string());
  }
  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 ||
      png_sig_cmp(signature, 0, 8) != 0) {
    throw ParseError("not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, warn_silently);
  if (png == nullptr) {
    throw ParseError("libpng initialization failed");
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ParseError("libpng initialization failed");
  }

  // Declared before setjmp so that longjmp does not skip their destructors.
  Image<std::uint16_t> image;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("corrupt PNG file " + path.string());
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth != 16 || color_type != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("expected a 16-bit single-channel PNG: " + path.string());
  }
  if constexpr (std::endian::native == std::endian::little) {
    png_set_swap(png);
  }
  png_read_update_info(png, info);

  image = Image<std::uint16_t>(static_cast<int>(width),
                               static_cast<int>(height), 0);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) {
    rows[y] = reinterpret_cast<png_bytep>(&image(0, static_cast<int>(y)));
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void write_png16(const std::filesystem::path& path,
                 const Image<std::uint16_t>& image) {
  FilePtr file = open_file(path, "wb");
  if (!file) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, warn_silently);
  if (png == nullptr) {
    throw Error("libpng initialization failed");
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("libpng initialization failed");
  }
  std::vector<png_bytep> rows(static_cast<size_t>(image.height()));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("failed writing PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if constexpr (std::endian::native == std::endian::little) {
    png_set_swap(png);
  }
  for (int y = 0; y < image.height(); ++y) {
    // libpng does not modify rows on write.
    rows[static_cast<size_t>(y)] =
        const_cast<png_bytep>(reinterpret_cast<const png_byte*>(&image(0, y)));
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace objmap
