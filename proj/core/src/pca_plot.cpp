#include "qda/pca_plot.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace qda {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string ramp_color(double t) {
  // blue (#2166ac) to red (#b2182b)
  const double r = 0x21 + t * (0xb2 - 0x21);
  const double g = 0x66 + t * (0x18 - 0x66);
  const double b = 0xac + t * (0x2b - 0xac);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(std::lround(r)),
                static_cast<int>(std::lround(g)), static_cast<int>(std::lround(b)));
  return buf;
}

}  // namespace

PcaProjection pca2(const Tensor& rows) {
  if (rows.rank() != 2) throw std::invalid_argument("pca2: expected a (n,d) matrix");
  const int n = rows.dim(0), d = rows.dim(1);
  if (n < 3) throw std::invalid_argument("pca2: fewer samples than needed for 2 components");
  Eigen::Map<const RowMat> x(rows.data(), n, d);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const RowMat centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("pca2: eigendecomposition failed");

  PcaProjection out;
  out.basis = Tensor({2, d});
  out.center.assign(mean.data(), mean.data() + d);
  for (int k = 0; k < 2; ++k) {
    const int col = d - 1 - k;  // eigenvalues ascend
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    int imax = 0;
    for (int i = 1; i < d; ++i)
      if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
    if (v[imax] < 0.0) v = -v;
    for (int i = 0; i < d; ++i) out.basis[static_cast<long>(k) * d + i] = v[i];
    out.eigenvalues[static_cast<std::size_t>(k)] = solver.eigenvalues()[col];
  }
  out.coords = Tensor({n, 2});
  Eigen::Map<const RowMat> basis(out.basis.data(), 2, d);
  Eigen::Map<RowMat>(out.coords.data(), n, 2) = centered * basis.transpose();
  return out;
}

void emit_embedding_plot(const Tensor& source_features, const Tensor& target_features,
                         const std::vector<double>& source_labels, const std::vector<double>& target_labels,
                         const std::filesystem::path& svg_path) {
  if (source_features.rank() != 2 || target_features.rank() != 2 ||
      source_features.dim(1) != target_features.dim(1))
    throw std::invalid_argument("emit_embedding_plot: feature matrices must be (n,d) with a shared d");
  const int ns = source_features.dim(0), nt = target_features.dim(0);
  if (ns < 10 || nt < 10) throw std::invalid_argument("emit_embedding_plot: need at least 10 samples per domain");
  const int d = source_features.dim(1);

  Tensor joint({ns + nt, d});
  std::copy(source_features.data(), source_features.data() + source_features.size(), joint.data());
  std::copy(target_features.data(), target_features.data() + target_features.size(),
            joint.data() + source_features.size());
  const PcaProjection proj = pca2(joint);

  double xmin = proj.coords[0], xmax = proj.coords[0];
  double ymin = proj.coords[1], ymax = proj.coords[1];
  for (int i = 0; i < ns + nt; ++i) {
    xmin = std::min(xmin, proj.coords[static_cast<long>(i) * 2]);
    xmax = std::max(xmax, proj.coords[static_cast<long>(i) * 2]);
    ymin = std::min(ymin, proj.coords[static_cast<long>(i) * 2 + 1]);
    ymax = std::max(ymax, proj.coords[static_cast<long>(i) * 2 + 1]);
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;

  double lmin = 0.0, lmax = 1.0;
  const bool have_labels = !source_labels.empty() || !target_labels.empty();
  if (have_labels) {
    lmin = 1e300;
    lmax = -1e300;
    for (double v : source_labels) {
      lmin = std::min(lmin, v);
      lmax = std::max(lmax, v);
    }
    for (double v : target_labels) {
      lmin = std::min(lmin, v);
      lmax = std::max(lmax, v);
    }
    if (lmax == lmin) lmax = lmin + 1.0;
  }

  const double width = 640.0, height = 480.0, margin = 24.0;
  auto px = [&](double x) { return margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin); };
  auto py = [&](double y) { return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin); };
  auto color_for = [&](const std::vector<double>& labels, int i) {
    if (!have_labels || i >= static_cast<int>(labels.size())) return std::string("#888888");
    return ramp_color((labels[static_cast<std::size_t>(i)] - lmin) / (lmax - lmin));
  };

  std::ofstream out(svg_path);
  if (!out) throw std::runtime_error("cannot open " + svg_path.string() + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  for (int i = 0; i < ns; ++i) {
    const double x = px(proj.coords[static_cast<long>(i) * 2]);
    const double y = py(proj.coords[static_cast<long>(i) * 2 + 1]);
    out << "  <circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"" << color_for(source_labels, i)
        << "\" fill-opacity=\"0.8\"/>\n";
  }
  for (int i = 0; i < nt; ++i) {
    const double x = px(proj.coords[static_cast<long>(ns + i) * 2]);
    const double y = py(proj.coords[static_cast<long>(ns + i) * 2 + 1]);
    out << "  <rect x=\"" << x - 2.5 << "\" y=\"" << y - 2.5 << "\" width=\"5\" height=\"5\" fill=\""
        << color_for(target_labels, i) << "\" fill-opacity=\"0.8\"/>\n";
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("failed writing " + svg_path.string());
}

}  // namespace qda
