#include "qda/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace qda {

long shape_size(const std::vector<int>& shape) {
  long n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), values_(static_cast<std::size_t>(shape_size(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != static_cast<long>(values_.size()))
    throw std::invalid_argument("value count does not match shape " + shape_str(shape_));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

double Tensor::item() const {
  if (values_.size() != 1) throw std::logic_error("item() on tensor of shape " + shape_str(shape_));
  return values_[0];
}

bool Tensor::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Tensor stack(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("stack of zero tensors");
  std::vector<int> shape;
  shape.push_back(static_cast<int>(parts.size()));
  for (int d : parts[0].shape()) shape.push_back(d);
  Tensor out(shape);
  const long stride = parts[0].size();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!parts[i].same_shape(parts[0]))
      throw std::invalid_argument("stack of tensors with mismatched shapes");
    std::memcpy(out.data() + static_cast<long>(i) * stride, parts[i].data(),
                static_cast<std::size_t>(stride) * sizeof(double));
  }
  return out;
}

}  // namespace qda
