#include "loopkit/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <string>

#include "loopkit/errors.hpp"

namespace loopkit {

GrayImage to_gray(const Image& img) {
  GrayImage g(img.width, img.height);
  const std::size_t n = std::size_t(img.width) * img.height;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = img.data.data() + i * img.channels;
    g.data[i] = img.channels >= 3 ? 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2] : float(p[0]);
  }
  return g;
}

namespace {

int color_type_for(int channels) {
  switch (channels) {
    case 1: return PNG_COLOR_TYPE_GRAY;
    case 2: return PNG_COLOR_TYPE_GRAY_ALPHA;
    case 3: return PNG_COLOR_TYPE_RGB;
    case 4: return PNG_COLOR_TYPE_RGBA;
    default: throw InvalidArgument("unsupported channel count " + std::to_string(channels));
  }
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

void write_to_vector(png_structp png, png_bytep bytes, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), bytes, bytes + len);
}

void flush_noop(png_structp) {}

thread_local std::string png_message;

void on_png_error(png_structp png, png_const_charp msg) {
  png_message = msg;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

template <typename SetupIo>
void write_png_impl(const Image& img, SetupIo&& setup_io) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png encoding failed: " + png_message);
  }
  setup_io(png);
  png_set_IHDR(png, info, img.width, img.height, 8, color_type_for(img.channels),
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y)
    png_write_row(png, const_cast<png_bytep>(img.px(0, y)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("invalid png " + path.string() + ": " + png_message);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_packing(png);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  Image img(static_cast<int>(png_get_image_width(png, info)),
            static_cast<int>(png_get_image_height(png, info)),
            static_cast<int>(png_get_channels(png, info)));
  for (int y = 0; y < img.height; ++y) png_read_row(png, img.px(0, y), nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  std::vector<std::uint8_t> out;
  write_png_impl(img, [&](png_structp png) {
    png_set_write_fn(png, &out, write_to_vector, flush_noop);
  });
  return out;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  write_png_impl(img, [&](png_structp png) { png_init_io(png, file.get()); });
}

}  // namespace loopkit
