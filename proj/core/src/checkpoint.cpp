#include "qda/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qda {

namespace {

constexpr char kMagic[4] = {'Q', 'D', 'A', 'R'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) throw std::runtime_error("truncated archive");
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  if (!in) throw std::runtime_error("truncated archive");
  return v;
}

void write_name(std::ostream& out, const std::string& name) {
  write_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
}

std::string read_name(std::istream& in) {
  const std::uint32_t len = read_u32(in);
  std::string name(len, '\0');
  in.read(name.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("truncated archive");
  return name;
}

}  // namespace

const Tensor& Archive::tensor(const std::string& name) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("archive has no tensor '" + name + "'");
  return it->second;
}

const std::string& Archive::string(const std::string& name) const {
  const auto it = strings_.find(name);
  if (it == strings_.end()) throw std::out_of_range("archive has no string '" + name + "'");
  return it->second;
}

void Archive::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u64(out, tensors_.size() + strings_.size());
  for (const auto& [name, t] : tensors_) {
    out.put(static_cast<char>(0));
    write_name(out, name);
    write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) write_u32(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size()) * 8);
  }
  for (const auto& [name, s] : strings_) {
    out.put(static_cast<char>(1));
    write_name(out, name);
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Archive Archive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path.string() + " is not a qda archive");
  const std::uint32_t version = read_u32(in);
  if (version != kVersion)
    throw std::runtime_error("unsupported archive version " + std::to_string(version) + " in " + path.string());
  const std::uint64_t count = read_u64(in);
  Archive ar;
  for (std::uint64_t e = 0; e < count; ++e) {
    const int kind = in.get();
    if (kind == EOF) throw std::runtime_error("truncated archive " + path.string());
    const std::string name = read_name(in);
    if (kind == 0) {
      const std::uint32_t rank = read_u32(in);
      std::vector<int> shape(rank);
      for (std::uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(read_u32(in));
      Tensor t(shape);
      in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size()) * 8);
      if (!in) throw std::runtime_error("truncated tensor '" + name + "' in " + path.string());
      ar.tensors_[name] = std::move(t);
    } else if (kind == 1) {
      const std::uint64_t len = read_u64(in);
      std::string s(len, '\0');
      in.read(s.data(), static_cast<std::streamsize>(len));
      if (!in) throw std::runtime_error("truncated string '" + name + "' in " + path.string());
      ar.strings_[name] = std::move(s);
    } else {
      throw std::runtime_error("unknown entry kind in " + path.string());
    }
  }
  return ar;
}

void save_model(const Model& model, Archive& ar) {
  const BackboneConfig& cfg = model.backbone.config();
  ar.put_scalar("meta.in_channels", cfg.in_channels);
  for (int s = 0; s < 4; ++s)
    ar.put_scalar("meta.channels" + std::to_string(s + 1), cfg.channels[static_cast<std::size_t>(s)]);
  ar.put_scalar("meta.kernel_size", cfg.kernel_size);
  for (const auto& [name, p] : model.named_parameters()) ar.put_tensor(name, p.value());
}

Model load_model(const Archive& ar) {
  BackboneConfig cfg;
  cfg.in_channels = static_cast<int>(ar.scalar("meta.in_channels"));
  for (int s = 0; s < 4; ++s)
    cfg.channels[static_cast<std::size_t>(s)] = static_cast<int>(ar.scalar("meta.channels" + std::to_string(s + 1)));
  cfg.kernel_size = static_cast<int>(ar.scalar("meta.kernel_size"));
  const int predictor_hidden = ar.tensor("predictor.fc1.weight").dim(0);
  const int discriminator_hidden = ar.tensor("discriminator.fc1.weight").dim(0);
  Rng scratch(0);
  Model model(cfg, predictor_hidden, discriminator_hidden, scratch);
  for (auto& [name, p] : model.named_parameters()) {
    const Tensor& stored = ar.tensor(name);
    Var v = p;
    if (!stored.same_shape(v.value()))
      throw std::runtime_error("checkpoint tensor '" + name + "' has shape " + shape_str(stored.shape()) +
                               ", expected " + shape_str(v.value().shape()));
    v.mutable_value() = stored;
  }
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  Archive ar;
  save_model(model, ar);
  ar.save(path);
}

Model load_checkpoint(const std::filesystem::path& path) { return load_model(Archive::load(path)); }

}  // namespace qda
