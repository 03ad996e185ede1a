#pragma once

#include <vector>

#include "qda/rng.hpp"
#include "qda/tensor.hpp"

namespace qda {

// Two-domain benchmark generator with known ground truth. Samples are small
// multi-channel images whose distortion level drives the label through a
// strictly monotone quality function; the target domain additionally passes
// through an invertible channel-mixing map plus a per-channel style
// (gain/offset) shift with larger per-sample jitter.
struct SyntheticDomainSpec {
  int feature_dim = 3;  // image channels
  int image_side = 32;
  int pattern_count = 4;
  int source_count = 2000;
  int target_count = 1500;

  double noise_level = 1.4;          // distortion noise amplitude at full distortion
  double signal_fade = 0.6;          // content attenuation at full distortion
  double source_style_jitter = 0.15;
  double target_style_jitter = 0.4;
  double gain_shift = 0.5;           // target per-channel gain offset magnitude
  double mean_shift = 0.4;           // target per-channel mean offset magnitude
  double channel_mix_angle = 0.8;    // radians, Givens rotations across channel pairs

  double label_lo = 1.0;  // raw label scale (MOS-like)
  double label_hi = 5.0;

  unsigned long pattern_seed = 20240717;  // content shared by both domains
  unsigned long shift_seed = 31;          // fixed target shift direction
};

struct LabeledSet {
  std::vector<Tensor> images;   // (C,H,W) each
  std::vector<double> labels;   // raw scale
  std::vector<double> levels;   // latent distortion levels, for diagnostics
};

struct DomainPair {
  LabeledSet source;
  LabeledSet target;  // labels present but hidden from training
};

DomainPair make_synthetic_domains(const SyntheticDomainSpec& spec, Rng& rng);

}  // namespace qda
