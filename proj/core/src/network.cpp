#include "qda/network.hpp"

#include <cmath>
#include <stdexcept>

namespace qda {

namespace {

Tensor he_uniform(std::vector<int> shape, long fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (long i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

Conv2dLayer::Conv2dLayer(int in_ch, int out_ch, int ksize, int stride_, int pad_, Rng& rng)
    : weight(Var::param(he_uniform({out_ch, in_ch, ksize, ksize}, static_cast<long>(in_ch) * ksize * ksize, rng))),
      bias(Var::param(Tensor::zeros({out_ch}))),
      stride(stride_),
      pad(pad_) {}

Var Conv2dLayer::forward(const Var& x) const { return conv2d(x, weight, bias, stride, pad); }

AffineLayer::AffineLayer(int in_dim, int out_dim, Rng& rng)
    : weight(Var::param(he_uniform({out_dim, in_dim}, in_dim, rng))), bias(Var::param(Tensor::zeros({out_dim}))) {}

StagedBackbone::StagedBackbone(const BackboneConfig& cfg, Rng& rng) : cfg_(cfg) {
  int in_ch = cfg.in_channels;
  for (int s = 0; s < 4; ++s) {
    if (s > 0 && cfg.channels[static_cast<std::size_t>(s)] < cfg.channels[static_cast<std::size_t>(s - 1)])
      throw std::invalid_argument("backbone channel counts must be non-decreasing");
    stages_[static_cast<std::size_t>(s)] = Conv2dLayer(in_ch, cfg.channels[static_cast<std::size_t>(s)],
                                                       cfg.kernel_size, /*stride=*/2, /*pad=*/1, rng);
    in_ch = cfg.channels[static_cast<std::size_t>(s)];
  }
}

StagedBackbone::Forward StagedBackbone::forward(const Var& x, const StageTaps& taps) const {
  if (x.value().rank() != 4) throw std::invalid_argument("backbone input must be (N,C,H,W)");
  if (x.value().dim(1) != cfg_.in_channels)
    throw std::invalid_argument("backbone input has " + std::to_string(x.value().dim(1)) + " channels, expected " +
                                std::to_string(cfg_.in_channels));
  if (x.value().dim(2) < 32 || x.value().dim(3) < 32)
    throw std::invalid_argument("backbone input spatial size must be >= 32");

  Forward out;
  Var cur = x;
  int prev_h = x.value().dim(2);
  for (int s = 0; s < 4; ++s) {
    Var conv = relu(stages_[static_cast<std::size_t>(s)].forward(cur));
    if (!conv.value().all_finite())
      throw NumericError("non-finite activation after stage " + std::to_string(s + 1));
    if (conv.value().dim(2) >= prev_h)
      throw std::logic_error("stage " + std::to_string(s + 1) + " did not reduce the spatial size");
    prev_h = conv.value().dim(2);
    const auto& tap = taps[static_cast<std::size_t>(s)];
    Var tapped = tap ? tap(conv) : conv;
    if (!tapped.value().same_shape(conv.value()))
      throw std::invalid_argument("stage tap changed the feature shape at stage " + std::to_string(s + 1));
    if (!tapped.value().all_finite())
      throw NumericError("non-finite activation after stage " + std::to_string(s + 1) + " tap");
    out.stage[static_cast<std::size_t>(s)] = tapped;
    cur = tapped;
  }
  out.pooled = global_avg_pool(cur);
  return out;
}

std::vector<std::pair<std::string, Var>> StagedBackbone::named_parameters() const {
  std::vector<std::pair<std::string, Var>> params;
  for (int s = 0; s < 4; ++s) {
    const std::string prefix = "backbone.stage" + std::to_string(s + 1);
    params.emplace_back(prefix + ".weight", stages_[static_cast<std::size_t>(s)].weight);
    params.emplace_back(prefix + ".bias", stages_[static_cast<std::size_t>(s)].bias);
  }
  return params;
}

PredictorHead::PredictorHead(int in_dim, int hidden, Rng& rng) : fc1_(in_dim, hidden, rng), fc2_(hidden, 1, rng) {}

Var PredictorHead::forward(const Var& f) const { return sigmoid(fc2_.forward(relu(fc1_.forward(f)))); }

std::vector<std::pair<std::string, Var>> PredictorHead::named_parameters() const {
  return {{"predictor.fc1.weight", fc1_.weight},
          {"predictor.fc1.bias", fc1_.bias},
          {"predictor.fc2.weight", fc2_.weight},
          {"predictor.fc2.bias", fc2_.bias}};
}

DiscriminatorHead::DiscriminatorHead(int in_dim, int hidden, Rng& rng)
    : fc1_(in_dim, hidden, rng), fc2_(hidden, hidden, rng), fc3_(hidden, 1, rng) {}

Var DiscriminatorHead::forward(const Var& f) const {
  return sigmoid(fc3_.forward(relu(fc2_.forward(relu(fc1_.forward(f))))));
}

std::vector<std::pair<std::string, Var>> DiscriminatorHead::named_parameters() const {
  return {{"discriminator.fc1.weight", fc1_.weight}, {"discriminator.fc1.bias", fc1_.bias},
          {"discriminator.fc2.weight", fc2_.weight}, {"discriminator.fc2.bias", fc2_.bias},
          {"discriminator.fc3.weight", fc3_.weight}, {"discriminator.fc3.bias", fc3_.bias}};
}

Model::Model(const BackboneConfig& cfg, int predictor_hidden, int discriminator_hidden, Rng& rng)
    : backbone(cfg, rng),
      predictor(cfg.channels[3], predictor_hidden, rng),
      discriminator(cfg.channels[3], discriminator_hidden, rng) {}

std::vector<std::pair<std::string, Var>> Model::named_parameters() const {
  auto params = backbone.named_parameters();
  for (auto& p : predictor.named_parameters()) params.push_back(p);
  for (auto& p : discriminator.named_parameters()) params.push_back(p);
  return params;
}

void Model::zero_grad() const {
  for (auto& [name, p] : named_parameters()) {
    Var v = p;
    v.zero_grad();
  }
}

Var predict(const PredictorHead& head, const Var& features) { return head.forward(features); }

Var discriminate(const DiscriminatorHead& head, const Var& features) { return head.forward(features); }

}  // namespace qda
