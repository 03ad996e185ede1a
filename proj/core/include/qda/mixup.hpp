#pragma once

#include <vector>

#include "qda/autodiff.hpp"
#include "qda/network.hpp"
#include "qda/rng.hpp"

namespace qda {

// Per-channel mean and population standard deviation of one feature map.
struct StyleStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Plain (non-differentiable) stats of a single (C,H,W) map.
StyleStats channel_stats_plain(const Tensor& fmap);

// Samples a partner index != anchor with probability proportional to a
// Gaussian kernel on the label difference, normalized over the rest of the
// batch. Throws when the batch holds a single sample.
int select_partner(int anchor, const std::vector<double>& labels, double tau, Rng& rng);

// Closed-form selection weights for the same kernel; used by tests and the
// sampler itself.
std::vector<double> partner_weights(int anchor, const std::vector<double>& labels, double tau);

// Beta(alpha, alpha) mixing coefficient in [0,1].
double sample_lambda(double alpha, Rng& rng);

enum class QualityStratum { Low, Medium, High };

// Quantile thresholds over the source training labels, fit once before
// training. Low: y < q33, Medium: q33 <= y < q67, High: y >= q67.
struct QualityStratifier {
  double q33 = 0.0;
  double q67 = 0.0;
  static QualityStratifier fit(const std::vector<double>& labels);
  QualityStratum stratify(double y) const;
};

// Interpolated quantile of the given probability over all labels.
double interpolated_quantile(std::vector<double> values, double p);

enum class StageRouting { QualityRouted, Stage1Only, Stage4Only, Stage23Only };

// High -> 1, Low -> 4, Medium -> coin flip between 2 and 3.
int route_stage(QualityStratum stratum, Rng& rng);

struct MixEvent {
  long iteration = 0;
  int anchor = 0;
  int partner = 0;
  double lambda = 0.0;
  int stage = 0;       // 1..4
  double y_mix = 0.0;  // source only
};

struct MixupConfig {
  double tau = 5e-2;
  double alpha = 1.0;
  double eps_std = 1e-6;
  StageRouting routing = StageRouting::QualityRouted;
  bool uniform_partner = false;  // ignore labels when pairing
};

// The style transfer of Eqs-style mixing: keeps the anchor content,
// interpolates per-channel statistics toward the partner stats.
// anchor: (K,C,H,W); partner stats: (K,C); lambdas: one per row.
Var style_mixup(const Var& anchor, const Var& partner_mean, const Var& partner_std,
                const std::vector<double>& lambdas, double eps_std);

struct SourceMixPlan {
  std::vector<MixEvent> events;  // one per batch row, ordered by anchor
};

SourceMixPlan plan_source_mixup(const std::vector<double>& labels, const QualityStratifier& strat,
                                const MixupConfig& cfg, Rng& rng, long iteration);

std::vector<double> mixed_labels(const SourceMixPlan& plan, const std::vector<double>& labels);

// Builds the per-stage taps realizing a mix plan. Partner statistics are
// taken from the unmixed forward pass at the same stage.
StageTaps source_mixup_taps(const SourceMixPlan& plan, const StagedBackbone::Forward& unmixed, double eps_std);

// Runs the mixed forward pass: every anchor gets its partner's style
// interpolated in at the routed stage, downstream stages consume the result.
struct QsmResult {
  StagedBackbone::Forward forward;
  std::vector<double> labels;  // y_mix per row
  std::vector<MixEvent> events;
};
QsmResult apply_source_qsm(const StagedBackbone& backbone, const Var& x, const StagedBackbone::Forward& unmixed,
                           const std::vector<double>& labels, const QualityStratifier& strat,
                           const MixupConfig& cfg, Rng& rng, long iteration);

struct TargetMixPlan {
  std::vector<int> partner;
  std::vector<double> lambda;
};
TargetMixPlan plan_target_mixup(int batch, double alpha, Rng& rng);

// Label-free style mixing of the final-stage features with uniformly random
// distinct partners. A single-sample batch passes through unchanged.
Var apply_target_sm(const Var& stage4, const TargetMixPlan& plan, double eps_std);
Var apply_target_sm(const Var& stage4, double alpha, double eps_std, Rng& rng);

}  // namespace qda
