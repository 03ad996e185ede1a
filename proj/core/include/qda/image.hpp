#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "qda/tensor.hpp"

namespace qda {

// H x W x 3 raster with values in [0,1], row-major with interleaved channels.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, 0.0) {}

  static Image filled(int h, int w, const std::array<double, 3>& rgb);

  double& at(int row, int col, int c) {
    return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + static_cast<std::size_t>(c)];
  }
  double at(int row, int col, int c) const {
    return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + static_cast<std::size_t>(c)];
  }
};

// Binary portable pixmap, 8 bits per channel.
void write_ppm(const Image& img, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

// Bilinear resize so the shorter side equals `target`, aspect preserved.
Image resize_short_side(const Image& img, int target);
Image resize_bilinear(const Image& img, int out_h, int out_w);

// (3,H,W) tensor in [0,1].
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t);

}  // namespace qda
