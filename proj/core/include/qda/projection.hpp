#pragma once

#include <array>
#include <string>

#include "qda/image.hpp"
#include "qda/ply.hpp"
#include "qda/rng.hpp"
#include "qda/tensor.hpp"

namespace qda {

// Cube faces in stitching order: row 0 is +X,-X,+Y and row 1 is -Y,+Z,-Z.
enum Face : int { PlusX = 0, MinusX = 1, PlusY = 2, MinusY = 3, PlusZ = 4, MinusZ = 5 };

struct ProjectionConfig {
  int face_resolution = 256;
  // Background in [0,255] like point colors; mid-gray keeps brightness
  // statistics neutral.
  std::array<double, 3> background_color = {128.0, 128.0, 128.0};
  int point_splat_radius = 1;
};

struct FaceBox {
  int row = 0, col = 0, height = 0, width = 0;
};

struct MultiViewImage {
  Image image;
  std::string source_id;
  std::array<FaceBox, 6> face_boxes{};
};

// Orthographic projection of a normalized cloud onto each cube face with a
// per-pixel depth buffer (nearest point to the face plane wins; earlier point
// wins exact ties). Each point covers a square of side 2*splat_radius+1.
std::array<Image, 6> project_six_views(const PointCloud& pc, const ProjectionConfig& cfg);

// 2x3 grid in the Face order above; face_boxes record each placement.
MultiViewImage stitch(const std::array<Image, 6>& views, const ProjectionConfig& cfg);
Image extract_face(const MultiViewImage& mv, int face_index);

enum class CropMode { Train, Test };

// Train: uniform-random crop position plus horizontal flip with probability
// 0.5. Test: deterministic center crop, no flip. Returns a (3,side,side)
// tensor in [0,1].
Tensor crop_pipeline(const Image& img, CropMode mode, int side, Rng& rng);

// The full ingest path used for training images: stitch output resized so the
// shorter side is `resize_to`, then cropped to `side`.
Tensor ingest_image(const Image& img, CropMode mode, int resize_to, int side, Rng& rng);

}  // namespace qda
