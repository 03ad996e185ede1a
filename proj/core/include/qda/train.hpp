#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qda/align.hpp"
#include "qda/checkpoint.hpp"
#include "qda/config.hpp"
#include "qda/metrics.hpp"
#include "qda/mixup.hpp"
#include "qda/network.hpp"
#include "qda/synthetic.hpp"

namespace qda {

enum class AlignKind { None, MeanDiscrepancy, Conditional, RankConditional };
enum class Phase { WarmUp, Joint };

struct TrainConfig {
  int batch_size = 36;  // per domain
  long total_iters = 3000;
  long warmup_iters = 500;
  double lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  double mix_probability = 0.5;
  double alpha = 1.0;
  double tau = 5e-2;
  double epsilon = 1e-3;
  double label_bandwidth = 0.1;
  double feature_bandwidth = 0.0;  // 0 = per-batch median heuristic
  double grl_scale = 1.0;
  bool grl_ramp = false;
  StageRouting routing = StageRouting::QualityRouted;
  bool uniform_partner = false;
  bool source_mixup = true;
  bool target_mixup = true;
  AlignKind align = AlignKind::RankConditional;
  AlignConfig::Scope rank_weight_scope = AlignConfig::Scope::All;
  unsigned long seed = 1;
  long log_every = 100;
  double label_margin = 0.05;   // normalized labels live in (margin, 1-margin)
  double target_split = 0.75;   // target train fraction; the rest is held out
  double eps_std = 1e-6;
  BackboneConfig backbone;
  int predictor_hidden = 64;
  int discriminator_hidden = 64;
  int crop_side = 0;    // 0 disables the resize+crop ingest path
  int resize_to = 256;  // short side before cropping
  std::string metrics_csv;
  std::string mix_csv;
  std::string diag_csv;
};

Phase phase(long iter, const TrainConfig& cfg);

// Min-max normalization of raw labels into (margin, 1-margin).
struct LabelScaler {
  double lo = 0.0;
  double hi = 1.0;
  double margin = 0.05;
  static LabelScaler fit(const std::vector<double>& labels, double margin);
  double normalize(double y) const;
  double denormalize(double y) const;
};

Var mse_loss(const Var& predictions, const std::vector<double>& targets);

// Everything one evaluation of the composite loss depends on, with the
// stochastic pieces (mix plans) and the per-iteration constants (pseudo
// labels, detached predictions, kernel bandwidth) frozen by the caller so the
// loss is a deterministic function of the model parameters.
struct CompositeInputs {
  Var source_images;  // (N,C,H,W)
  Var target_images;
  std::vector<double> source_labels;  // normalized
  std::optional<SourceMixPlan> source_plan;
  std::optional<TargetMixPlan> target_plan;
  std::vector<double> pseudo_labels;  // empty = regenerate from the current predictor
  std::vector<double> source_preds;   // empty = regenerate (detached)
  double feature_bandwidth = 0.0;     // 0 = median heuristic on current features
  Phase phase = Phase::Joint;
  double grl_scale = 1.0;
};

struct LossBreakdown {
  Var total;
  double loss_p = 0.0;
  double loss_d = 0.0;
  double loss_r = 0.0;
  double mean_weight = 0.0;
  double nonzero_weight_fraction = 0.0;
};

LossBreakdown composite_loss(const Model& model, const CompositeInputs& inputs, const TrainConfig& cfg);

// v <- momentum*v + g + weight_decay*w; w <- w - lr*v. Parameters that
// received no gradient this step are left untouched.
void sgd_step(const std::vector<std::pair<std::string, Var>>& params, std::map<std::string, Tensor>& momenta,
              const TrainConfig& cfg, long iteration);

struct LogRow {
  long iter = 0;
  Phase phase = Phase::WarmUp;
  bool mixed = false;
  double loss_p = 0.0;
  double loss_d = 0.0;
  double loss_r = 0.0;
  MetricReport metrics;  // NaN-filled when the eval split is unusable
};

struct TrainResult {
  Model model;
  LabelScaler scaler;
  QualityStratifier stratifier;
  std::vector<LogRow> log;
  std::vector<MixEvent> mix_events;
  std::vector<unsigned char> mixed_history;  // one flag per iteration run
  MetricReport final_metrics;
  std::vector<int> target_eval_indices;
};

struct TrainRunOptions {
  std::filesystem::path resume_from;  // restore a saved state and continue
  std::filesystem::path state_out;    // save the full resumable state at the end
  long stop_after = -1;               // stop once this many iterations completed
};

// Two-phase training loop: discriminator-only warm-up, then joint
// optimization with stochastic mixing and per-batch pseudo labels.
// Fully reproducible given the config seed.
TrainResult train_run(const TrainConfig& cfg, const LabeledSet& source, const LabeledSet& target,
                      const TrainRunOptions& opts = {});

// Batched test-mode forward passes.
std::vector<double> predict_scores(const Model& model, const std::vector<Tensor>& images, int batch = 64);
Tensor pooled_features(const Model& model, const std::vector<Tensor>& images, int batch = 64);

TrainConfig train_config_from(const ConfigMap& map);
SyntheticDomainSpec synthetic_spec_from(const ConfigMap& map);

// Directory dataset: *.ppm images plus a labels.csv of "name,label" rows.
LabeledSet load_image_dir(const std::filesystem::path& dir, bool require_labels);

}  // namespace qda
