#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace loopkit {

/// Interleaved 8-bit raster (1 = gray, 3 = RGB, 4 = RGBA).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), data(std::size_t(w) * h * c, fill) {}

  bool empty() const { return data.empty(); }
  std::uint8_t* px(int x, int y) { return data.data() + (std::size_t(y) * width + x) * channels; }
  const std::uint8_t* px(int x, int y) const {
    return data.data() + (std::size_t(y) * width + x) * channels;
  }
  friend bool operator==(const Image&, const Image&) = default;
};

/// Single-channel float image, row major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  GrayImage() = default;
  GrayImage(int w, int h) : width(w), height(h), data(std::size_t(w) * h, 0.0f) {}

  float at(int x, int y) const { return data[std::size_t(y) * width + x]; }
  float& at(int x, int y) { return data[std::size_t(y) * width + x]; }
};

/// Luma (Rec. 601) of any supported channel layout; alpha is ignored.
GrayImage to_gray(const Image& img);

/// Throws IoError / FormatError.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);
std::vector<std::uint8_t> encode_png(const Image& img);

}  // namespace loopkit
