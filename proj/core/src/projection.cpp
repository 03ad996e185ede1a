#include "qda/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace qda {

namespace {

// In-plane coordinates and plane distance for one face. The axis conventions
// are chosen so a 90-degree rotation about Z permutes the side faces
// pixel-exactly: +X -> +Y -> -X -> -Y -> +X.
void face_coords(int face, const Point& p, double& u, double& v, double& depth) {
  switch (face) {
    case PlusX: u = p.y; v = p.z; depth = 1.0 - p.x; break;
    case MinusX: u = -p.y; v = p.z; depth = 1.0 + p.x; break;
    case PlusY: u = -p.x; v = p.z; depth = 1.0 - p.y; break;
    case MinusY: u = p.x; v = p.z; depth = 1.0 + p.y; break;
    case PlusZ: u = p.x; v = p.y; depth = 1.0 - p.z; break;
    default: u = -p.x; v = p.y; depth = 1.0 + p.z; break;
  }
}

int to_pixel(double t, int res) {
  const int i = static_cast<int>(std::floor((t + 1.0) * 0.5 * res));
  return std::clamp(i, 0, res - 1);
}

}  // namespace

std::array<Image, 6> project_six_views(const PointCloud& pc, const ProjectionConfig& cfg) {
  if (cfg.face_resolution < 8) throw std::invalid_argument("face_resolution must be >= 8");
  if (cfg.point_splat_radius < 0) throw std::invalid_argument("point_splat_radius must be >= 0");
  if (pc.empty()) throw std::invalid_argument("project_six_views: empty cloud");

  const int res = cfg.face_resolution;
  const std::array<double, 3> bg = {cfg.background_color[0] / 255.0, cfg.background_color[1] / 255.0,
                                    cfg.background_color[2] / 255.0};
  std::array<Image, 6> views;
  std::vector<double> depth_buf;
  for (int f = 0; f < 6; ++f) {
    views[static_cast<std::size_t>(f)] = Image::filled(res, res, bg);
    depth_buf.assign(static_cast<std::size_t>(res) * res, std::numeric_limits<double>::infinity());
    Image& img = views[static_cast<std::size_t>(f)];
    for (const Point& p : pc.points) {
      double u, v, depth;
      face_coords(f, p, u, v, depth);
      const int col = to_pixel(u, res);
      // v grows upward, rows grow downward.
      const int row = std::clamp(static_cast<int>(std::floor((1.0 - v) * 0.5 * res)), 0, res - 1);
      const int r0 = std::max(0, row - cfg.point_splat_radius);
      const int r1 = std::min(res - 1, row + cfg.point_splat_radius);
      const int c0 = std::max(0, col - cfg.point_splat_radius);
      const int c1 = std::min(res - 1, col + cfg.point_splat_radius);
      for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) {
          double& d = depth_buf[static_cast<std::size_t>(r) * res + c];
          if (depth < d) {
            d = depth;
            img.at(r, c, 0) = p.r / 255.0;
            img.at(r, c, 1) = p.g / 255.0;
            img.at(r, c, 2) = p.b / 255.0;
          }
        }
    }
  }
  return views;
}

MultiViewImage stitch(const std::array<Image, 6>& views, const ProjectionConfig& cfg) {
  const int res = views[0].height;
  for (const Image& v : views)
    if (v.height != res || v.width != res)
      throw std::invalid_argument("stitch: face resolutions do not match");
  (void)cfg;
  MultiViewImage mv;
  mv.image = Image(2 * res, 3 * res);
  for (int f = 0; f < 6; ++f) {
    const int grid_row = f / 3;
    const int grid_col = f % 3;
    FaceBox box{grid_row * res, grid_col * res, res, res};
    mv.face_boxes[static_cast<std::size_t>(f)] = box;
    const Image& face = views[static_cast<std::size_t>(f)];
    for (int r = 0; r < res; ++r)
      for (int c = 0; c < res; ++c)
        for (int k = 0; k < 3; ++k) mv.image.at(box.row + r, box.col + c, k) = face.at(r, c, k);
  }
  return mv;
}

Image extract_face(const MultiViewImage& mv, int face_index) {
  if (face_index < 0 || face_index >= 6) throw std::invalid_argument("extract_face: index out of range");
  const FaceBox& box = mv.face_boxes[static_cast<std::size_t>(face_index)];
  Image out(box.height, box.width);
  for (int r = 0; r < box.height; ++r)
    for (int c = 0; c < box.width; ++c)
      for (int k = 0; k < 3; ++k) out.at(r, c, k) = mv.image.at(box.row + r, box.col + c, k);
  return out;
}

Tensor crop_pipeline(const Image& img, CropMode mode, int side, Rng& rng) {
  if (side < 1) throw std::invalid_argument("crop_pipeline: side must be positive");
  if (side > img.height || side > img.width)
    throw std::invalid_argument("crop_pipeline: crop side " + std::to_string(side) + " exceeds image " +
                                std::to_string(img.height) + "x" + std::to_string(img.width));
  int row0, col0;
  bool flip = false;
  if (mode == CropMode::Train) {
    row0 = rng.uniform_int(0, img.height - side);
    col0 = rng.uniform_int(0, img.width - side);
    flip = rng.uniform() < 0.5;
  } else {
    row0 = (img.height - side) / 2;
    col0 = (img.width - side) / 2;
  }
  Tensor t({3, side, side});
  for (int k = 0; k < 3; ++k)
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        const int src_c = flip ? col0 + side - 1 - c : col0 + c;
        t[(static_cast<long>(k) * side + r) * side + c] = img.at(row0 + r, src_c, k);
      }
  return t;
}

Tensor ingest_image(const Image& img, CropMode mode, int resize_to, int side, Rng& rng) {
  const Image resized = resize_short_side(img, resize_to);
  return crop_pipeline(resized, mode, side, rng);
}

}  // namespace qda
