#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qda/autodiff.hpp"
#include "qda/rng.hpp"

namespace qda {

struct BackboneConfig {
  int in_channels = 3;
  std::array<int, 4> channels = {16, 32, 64, 128};
  int kernel_size = 3;
};

struct Conv2dLayer {
  Var weight;  // (out,in,k,k)
  Var bias;    // (out)
  int stride = 2;
  int pad = 1;

  Conv2dLayer() = default;
  Conv2dLayer(int in_ch, int out_ch, int ksize, int stride, int pad, Rng& rng);
  Var forward(const Var& x) const;
};

struct AffineLayer {
  Var weight;  // (out,in)
  Var bias;    // (out)

  AffineLayer() = default;
  AffineLayer(int in_dim, int out_dim, Rng& rng);
  Var forward(const Var& x) const { return affine(x, weight, bias); }
};

// Optional per-stage transform applied to a stage output before the next
// stage consumes it. An empty function is the identity.
using StageTaps = std::array<std::function<Var(const Var&)>, 4>;

// Four conv+ReLU blocks with stride-2 downsampling: spatial size strictly
// decreases, channel count does not decrease. Taps inject feature transforms
// between stages.
class StagedBackbone {
 public:
  StagedBackbone() = default;
  StagedBackbone(const BackboneConfig& cfg, Rng& rng);

  struct Forward {
    std::array<Var, 4> stage;  // post-tap stage outputs
    Var pooled;                // (N,C4) global average pool of stage 4
  };

  // Input spatial size must be at least 32 so all four stages keep a
  // positive extent.
  Forward forward(const Var& x, const StageTaps& taps = {}) const;

  const BackboneConfig& config() const { return cfg_; }
  std::vector<std::pair<std::string, Var>> named_parameters() const;

 private:
  BackboneConfig cfg_;
  std::array<Conv2dLayer, 4> stages_;
};

// Two affine layers with ReLU between and a terminal sigmoid; output in (0,1).
class PredictorHead {
 public:
  PredictorHead() = default;
  PredictorHead(int in_dim, int hidden, Rng& rng);
  Var forward(const Var& f) const;  // (N,d) -> (N,1)
  std::vector<std::pair<std::string, Var>> named_parameters() const;

 private:
  AffineLayer fc1_, fc2_;
};

// Two affine+ReLU layers then one affine layer with sigmoid.
class DiscriminatorHead {
 public:
  DiscriminatorHead() = default;
  DiscriminatorHead(int in_dim, int hidden, Rng& rng);
  Var forward(const Var& f) const;  // (N,d) -> (N,1)
  std::vector<std::pair<std::string, Var>> named_parameters() const;

 private:
  AffineLayer fc1_, fc2_, fc3_;
};

struct Model {
  StagedBackbone backbone;
  PredictorHead predictor;
  DiscriminatorHead discriminator;

  Model() = default;
  Model(const BackboneConfig& cfg, int predictor_hidden, int discriminator_hidden, Rng& rng);

  std::vector<std::pair<std::string, Var>> named_parameters() const;
  void zero_grad() const;
};

// Convenience wrappers matching the batched heads.
Var predict(const PredictorHead& head, const Var& features);
Var discriminate(const DiscriminatorHead& head, const Var& features);

}  // namespace qda
