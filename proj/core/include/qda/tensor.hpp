#pragma once

#include <string>
#include <vector>

namespace qda {

// Dense row-major array of doubles with shape metadata. Carries images,
// feature maps, kernel matrices and parameter storage alike.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double v);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  long size() const { return static_cast<long>(values_.size()); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](long i) { return values_[static_cast<std::size_t>(i)]; }
  double operator[](long i) const { return values_[static_cast<std::size_t>(i)]; }

  // Requires size() == 1.
  double item() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(double v);

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
};

long shape_size(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

// Stacks equally-shaped tensors along a new leading axis.
Tensor stack(const std::vector<Tensor>& parts);

}  // namespace qda
