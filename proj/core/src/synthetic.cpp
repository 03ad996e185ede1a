#include "qda/synthetic.hpp"

#include <cmath>
#include <stdexcept>

namespace qda {

namespace {

struct ShiftParams {
  std::vector<double> gain;    // target per-channel gains
  std::vector<double> offset;  // target per-channel offsets
};

ShiftParams derive_shift(const SyntheticDomainSpec& spec) {
  Rng rng(spec.shift_seed);
  ShiftParams p;
  p.gain.resize(static_cast<std::size_t>(spec.feature_dim));
  p.offset.resize(static_cast<std::size_t>(spec.feature_dim));
  for (int c = 0; c < spec.feature_dim; ++c) {
    const double direction = (c % 2 == 0) ? 1.0 : -1.0;
    const double magnitude = 0.7 + 0.3 * rng.uniform();
    p.gain[static_cast<std::size_t>(c)] = 1.0 + spec.gain_shift * direction * magnitude;
    p.offset[static_cast<std::size_t>(c)] = spec.mean_shift * direction * (0.7 + 0.3 * rng.uniform());
  }
  return p;
}

// Smooth per-channel wave patterns; frequencies low enough to be clearly
// separated from the distortion noise.
std::vector<Tensor> make_patterns(const SyntheticDomainSpec& spec) {
  Rng rng(spec.pattern_seed);
  std::vector<Tensor> patterns;
  patterns.reserve(static_cast<std::size_t>(spec.pattern_count));
  const int c = spec.feature_dim, s = spec.image_side;
  for (int k = 0; k < spec.pattern_count; ++k) {
    Tensor p({c, s, s});
    for (int ch = 0; ch < c; ++ch) {
      const double amp = 0.5 + rng.uniform();
      const double fx = rng.uniform(0.15, 0.55);
      const double fy = rng.uniform(0.15, 0.55);
      const double phase = rng.uniform(0.0, 6.283185307179586);
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
          p[(static_cast<long>(ch) * s + i) * s + j] = amp * std::sin(fx * i + fy * j + phase);
    }
    patterns.push_back(std::move(p));
  }
  return patterns;
}

void rotate_channels(Tensor& img, double angle) {
  if (angle == 0.0) return;
  const int c = img.dim(0);
  const long hw = static_cast<long>(img.dim(1)) * img.dim(2);
  const double cs = std::cos(angle), sn = std::sin(angle);
  for (int a = 0; a + 1 < c; ++a) {
    double* pa = img.data() + static_cast<long>(a) * hw;
    double* pb = img.data() + static_cast<long>(a + 1) * hw;
    for (long k = 0; k < hw; ++k) {
      const double va = pa[k], vb = pb[k];
      pa[k] = cs * va - sn * vb;
      pb[k] = sn * va + cs * vb;
    }
  }
}

// `level` is the latent quality level in [0,1]; distortion strength is its
// complement.
Tensor make_sample(const SyntheticDomainSpec& spec, const std::vector<Tensor>& patterns, double level,
                   bool target_domain, const ShiftParams& shift, Rng& rng) {
  const int c = spec.feature_dim, s = spec.image_side;
  Tensor img({c, s, s});
  for (const Tensor& p : patterns) {
    const double coef = rng.normal();
    for (long i = 0; i < img.size(); ++i) img[i] += coef * p[i];
  }
  // unit content RMS, so the distortion level stays identifiable regardless
  // of the drawn pattern mixture
  double rms = 0.0;
  for (long i = 0; i < img.size(); ++i) rms += img[i] * img[i];
  rms = std::sqrt(rms / static_cast<double>(img.size()));
  const double content_scale = 1.0 / std::max(rms, 1e-9);
  for (long i = 0; i < img.size(); ++i) img[i] *= content_scale;

  const double distortion = 1.0 - level;
  const double fade = 1.0 - spec.signal_fade * distortion;
  const double noise_amp = spec.noise_level * distortion;
  for (long i = 0; i < img.size(); ++i) img[i] = fade * img[i] + noise_amp * rng.normal();

  if (target_domain) rotate_channels(img, spec.channel_mix_angle);

  const double jitter = target_domain ? spec.target_style_jitter : spec.source_style_jitter;
  const long hw = static_cast<long>(s) * s;
  for (int ch = 0; ch < c; ++ch) {
    const double base_gain = target_domain ? shift.gain[static_cast<std::size_t>(ch)] : 1.0;
    const double base_offset = target_domain ? shift.offset[static_cast<std::size_t>(ch)] : 0.0;
    const double gain = base_gain * (1.0 + jitter * rng.normal());
    const double offset = base_offset + jitter * rng.normal();
    double* p = img.data() + static_cast<long>(ch) * hw;
    for (long k = 0; k < hw; ++k) p[k] = gain * p[k] + offset;
  }
  return img;
}

LabeledSet make_set(const SyntheticDomainSpec& spec, const std::vector<Tensor>& patterns, int count,
                    bool target_domain, const ShiftParams& shift, Rng& rng) {
  LabeledSet set;
  set.images.reserve(static_cast<std::size_t>(count));
  set.labels.reserve(static_cast<std::size_t>(count));
  set.levels.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double level = rng.uniform();
    set.images.push_back(make_sample(spec, patterns, level, target_domain, shift, rng));
    set.labels.push_back(spec.label_lo + (spec.label_hi - spec.label_lo) * level);
    set.levels.push_back(level);
  }
  return set;
}

}  // namespace

DomainPair make_synthetic_domains(const SyntheticDomainSpec& spec, Rng& rng) {
  if (spec.feature_dim < 1 || spec.image_side < 1) throw std::invalid_argument("invalid synthetic spec geometry");
  if (spec.source_count < 1 || spec.target_count < 1) throw std::invalid_argument("synthetic sample counts must be positive");
  if (spec.label_hi <= spec.label_lo) throw std::invalid_argument("label_hi must exceed label_lo");
  const std::vector<Tensor> patterns = make_patterns(spec);
  const ShiftParams shift = derive_shift(spec);
  DomainPair pair;
  pair.source = make_set(spec, patterns, spec.source_count, false, shift, rng);
  pair.target = make_set(spec, patterns, spec.target_count, true, shift, rng);
  return pair;
}

}  // namespace qda
