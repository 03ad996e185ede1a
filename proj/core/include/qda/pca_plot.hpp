#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "qda/tensor.hpp"

namespace qda {

struct PcaProjection {
  Tensor coords;  // (n,2)
  Tensor basis;   // (2,d) principal directions, sign-normalized
  std::array<double, 2> eigenvalues{};
  std::vector<double> center;  // column means removed before projection
};

// Top-2 principal component projection of the rows of a (n,d) matrix. The
// eigenvector signs are fixed (largest-magnitude entry positive) so the
// output is deterministic.
PcaProjection pca2(const Tensor& rows);

// Scatter of the joint 2D PCA embedding: source drawn as circles, target as
// squares, fill color ramped by label value. Written as an SVG file.
// Requires at least 10 samples per domain.
void emit_embedding_plot(const Tensor& source_features, const Tensor& target_features,
                         const std::vector<double>& source_labels, const std::vector<double>& target_labels,
                         const std::filesystem::path& svg_path);

}  // namespace qda
