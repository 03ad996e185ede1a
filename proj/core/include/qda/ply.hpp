#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

namespace qda {

class PlyParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point {
  double x = 0.0, y = 0.0, z = 0.0;
  // Color channels in [0,255]; white when the file carries no color.
  double r = 255.0, g = 255.0, b = 255.0;
};

struct PointCloud {
  std::vector<Point> points;
  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

// Reads ascii or binary_little_endian PLY files with a vertex element holding
// x/y/z (float32 or float64) and optional red/green/blue (uchar). Elements
// after the vertices are ignored.
PointCloud load_ply(const std::filesystem::path& path);

// Centers the bounding box at the origin and scales the largest axis extent
// to 2 so the cloud fits in [-1,1]^3. A cloud of identical points maps to the
// origin with scale 1. Colors are untouched.
PointCloud normalize_cloud(const PointCloud& pc);

}  // namespace qda
