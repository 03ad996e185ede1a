#include "qda/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace qda {

Image Image::filled(int h, int w, const std::array<double, 3>& rgb) {
  Image img(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int k = 0; k < 3; ++k) img.at(r, c, k) = rgb[static_cast<std::size_t>(k)];
  return img;
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c)
      for (int k = 0; k < 3; ++k) {
        const double v = std::clamp(img.at(r, c, k), 0.0, 1.0);
        row[static_cast<std::size_t>(c) * 3 + static_cast<std::size_t>(k)] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

namespace {
// Skips whitespace and '#' comments in a PPM header.
int next_header_int(std::istream& in, const std::filesystem::path& path) {
  for (;;) {
    const int ch = in.peek();
    if (ch == EOF) throw std::runtime_error("truncated ppm header in " + path.string());
    if (std::isspace(ch)) {
      in.get();
      continue;
    }
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    break;
  }
  int v = 0;
  in >> v;
  if (!in) throw std::runtime_error("malformed ppm header in " + path.string());
  return v;
}
}  // namespace

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P6") throw std::runtime_error("unsupported pixmap magic '" + magic + "' in " + path.string());
  const int w = next_header_int(in, path);
  const int h = next_header_int(in, path);
  const int maxval = next_header_int(in, path);
  if (w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("unsupported pixmap geometry in " + path.string());
  in.get();  // single whitespace after maxval
  Image img(h, w);
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
  for (int r = 0; r < h; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw std::runtime_error("truncated pixel data in " + path.string());
    for (int c = 0; c < w; ++c)
      for (int k = 0; k < 3; ++k)
        img.at(r, c, k) = row[static_cast<std::size_t>(c) * 3 + static_cast<std::size_t>(k)] / 255.0;
  }
  return img;
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize to empty image");
  Image out(out_h, out_w);
  const double sy = static_cast<double>(img.height) / out_h;
  const double sx = static_cast<double>(img.width) / out_w;
  for (int r = 0; r < out_h; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int c = 0; c < out_w; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int k = 0; k < 3; ++k) {
        const double top = (1.0 - wx) * img.at(y0, x0, k) + wx * img.at(y0, x1, k);
        const double bot = (1.0 - wx) * img.at(y1, x0, k) + wx * img.at(y1, x1, k);
        out.at(r, c, k) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

Image resize_short_side(const Image& img, int target) {
  if (target < 1) throw std::invalid_argument("resize_short_side: target must be positive");
  if (img.height <= 0 || img.width <= 0) throw std::invalid_argument("resize_short_side: empty image");
  const int short_side = std::min(img.height, img.width);
  const double scale = static_cast<double>(target) / short_side;
  const int out_h = std::max(1, static_cast<int>(std::lround(img.height * scale)));
  const int out_w = std::max(1, static_cast<int>(std::lround(img.width * scale)));
  return resize_bilinear(img, out_h, out_w);
}

Tensor image_to_tensor(const Image& img) {
  Tensor t({3, img.height, img.width});
  for (int k = 0; k < 3; ++k)
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c)
        t[(static_cast<long>(k) * img.height + r) * img.width + c] = img.at(r, c, k);
  return t;
}

Image tensor_to_image(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 3) throw std::invalid_argument("tensor_to_image: expected a (3,H,W) tensor");
  Image img(t.dim(1), t.dim(2));
  for (int k = 0; k < 3; ++k)
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c)
        img.at(r, c, k) = t[(static_cast<long>(k) * img.height + r) * img.width + c];
  return img;
}

}  // namespace qda
