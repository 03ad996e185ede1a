#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "qda/network.hpp"
#include "qda/tensor.hpp"

namespace qda {

// Versioned little-endian container of named tensors and strings. Doubles are
// stored raw, so round trips are bit-exact.
class Archive {
 public:
  void put_tensor(const std::string& name, const Tensor& t) { tensors_[name] = t; }
  void put_string(const std::string& name, const std::string& s) { strings_[name] = s; }
  void put_scalar(const std::string& name, double v) { tensors_[name] = Tensor::scalar(v); }

  bool has_tensor(const std::string& name) const { return tensors_.count(name) > 0; }
  bool has_string(const std::string& name) const { return strings_.count(name) > 0; }
  const Tensor& tensor(const std::string& name) const;
  const std::string& string(const std::string& name) const;
  double scalar(const std::string& name) const { return tensor(name).item(); }

  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  void save(const std::filesystem::path& path) const;
  static Archive load(const std::filesystem::path& path);

 private:
  std::map<std::string, Tensor> tensors_;
  std::map<std::string, std::string> strings_;
};

// Model checkpointing: all parameters plus the architecture scalars needed to
// rebuild the model shape.
void save_model(const Model& model, Archive& ar);
Model load_model(const Archive& ar);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace qda
