#include "qda/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "qda/projection.hpp"

namespace qda {

namespace {

constexpr unsigned long kSplitSalt = 0x9E3779B97F4A7C15ull;
constexpr unsigned long kInitSalt = 0xD1B54A32D192ED03ull;

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> column(const Tensor& t) {
  return std::vector<double>(t.data(), t.data() + t.size());
}

}  // namespace

Phase phase(long iter, const TrainConfig& cfg) {
  if (iter < 0 || iter >= cfg.total_iters) throw std::invalid_argument("phase: iteration out of range");
  return iter < cfg.warmup_iters ? Phase::WarmUp : Phase::Joint;
}

LabelScaler LabelScaler::fit(const std::vector<double>& labels, double margin) {
  if (labels.empty()) throw std::invalid_argument("label scaler fit on an empty set");
  if (margin < 0.0 || margin >= 0.5) throw std::invalid_argument("label margin must be in [0, 0.5)");
  LabelScaler s;
  s.margin = margin;
  s.lo = *std::min_element(labels.begin(), labels.end());
  s.hi = *std::max_element(labels.begin(), labels.end());
  return s;
}

double LabelScaler::normalize(double y) const {
  if (hi == lo) return 0.5;
  return margin + (1.0 - 2.0 * margin) * (y - lo) / (hi - lo);
}

double LabelScaler::denormalize(double y) const {
  if (hi == lo) return lo;
  return lo + (y - margin) / (1.0 - 2.0 * margin) * (hi - lo);
}

Var mse_loss(const Var& predictions, const std::vector<double>& targets) {
  if (predictions.value().size() != static_cast<long>(targets.size()))
    throw std::invalid_argument("mse_loss: prediction/target count mismatch");
  Tensor t(predictions.value().shape(), std::vector<double>(targets.begin(), targets.end()));
  const Var diff = sub(predictions, Var::constant(std::move(t)));
  return mean(mul(diff, diff));
}

LossBreakdown composite_loss(const Model& model, const CompositeInputs& inputs, const TrainConfig& cfg) {
  LossBreakdown out;
  const StagedBackbone::Forward fwd_s = model.backbone.forward(inputs.source_images);
  const StagedBackbone::Forward fwd_t = model.backbone.forward(inputs.target_images);

  // Prediction loss, on mixed features and labels when a source plan exists.
  Var pred_source_orig = model.predictor.forward(fwd_s.pooled);
  Var pooled_s_for_d = fwd_s.pooled;
  Var pooled_t_for_d = fwd_t.pooled;
  Var loss_p;
  if (inputs.source_plan.has_value()) {
    const StageTaps taps = source_mixup_taps(*inputs.source_plan, fwd_s, cfg.eps_std);
    const StagedBackbone::Forward mixed_fwd = model.backbone.forward(inputs.source_images, taps);
    pooled_s_for_d = mixed_fwd.pooled;
    const std::vector<double> y_mix = mixed_labels(*inputs.source_plan, inputs.source_labels);
    loss_p = mse_loss(model.predictor.forward(mixed_fwd.pooled), y_mix);
  } else {
    loss_p = mse_loss(pred_source_orig, inputs.source_labels);
  }
  if (inputs.target_plan.has_value() && !inputs.target_plan->partner.empty())
    pooled_t_for_d = global_avg_pool(apply_target_sm(fwd_t.stage[3], *inputs.target_plan, cfg.eps_std));

  out.loss_p = loss_p.value().item();
  Var total = scale(loss_p, cfg.lambda1);

  if (cfg.lambda2 != 0.0) {
    const Var d_s = model.discriminator.forward(gradient_reversal(pooled_s_for_d, inputs.grl_scale));
    const Var d_t = model.discriminator.forward(gradient_reversal(pooled_t_for_d, inputs.grl_scale));
    const Var loss_d = domain_discriminator_loss(d_s, d_t);
    out.loss_d = loss_d.value().item();
    total = add(total, scale(loss_d, cfg.lambda2));
  }

  // Alignment always runs on the original (unmixed) pooled features.
  if (inputs.phase == Phase::Joint && cfg.lambda3 != 0.0 && cfg.align != AlignKind::None) {
    std::vector<double> pseudo = inputs.pseudo_labels;
    if (pseudo.empty()) pseudo = column(model.predictor.forward(fwd_t.pooled).value());
    Var loss_r;
    if (cfg.align == AlignKind::MeanDiscrepancy) {
      loss_r = mean_discrepancy_loss(fwd_s.pooled, fwd_t.pooled, inputs.feature_bandwidth);
    } else {
      std::vector<double> source_preds = inputs.source_preds;
      if (source_preds.empty()) source_preds = column(pred_source_orig.value());
      AlignmentBatch batch;
      batch.source_features = fwd_s.pooled;
      batch.target_features = fwd_t.pooled;
      batch.source_labels = inputs.source_labels;
      batch.target_labels = pseudo;
      batch.source_preds = source_preds;
      batch.target_preds = pseudo;
      AlignConfig acfg;
      acfg.label_bandwidth = cfg.label_bandwidth;
      acfg.feature_bandwidth = inputs.feature_bandwidth;
      acfg.epsilon = cfg.epsilon;
      acfg.rank_weight_scope = cfg.rank_weight_scope;
      acfg.use_rank_weights = cfg.align == AlignKind::RankConditional;
      const AlignmentTerms terms = conditional_alignment_loss(batch, acfg);
      loss_r = terms.loss;
      out.mean_weight = terms.mean_weight;
      out.nonzero_weight_fraction = terms.nonzero_weight_fraction;
    }
    out.loss_r = loss_r.value().item();
    total = add(total, scale(loss_r, cfg.lambda3));
  }

  out.total = total;
  return out;
}

void sgd_step(const std::vector<std::pair<std::string, Var>>& params, std::map<std::string, Tensor>& momenta,
              const TrainConfig& cfg, long iteration) {
  for (const auto& [name, param] : params) {
    Var p = param;
    if (!p.has_grad()) continue;
    const Tensor& g = p.grad();
    if (!g.all_finite())
      throw NumericError("non-finite gradient in " + name + " at iteration " + std::to_string(iteration));
    Tensor& w = p.mutable_value();
    auto [it, inserted] = momenta.try_emplace(name, Tensor::zeros(w.shape()));
    Tensor& v = it->second;
    for (long i = 0; i < w.size(); ++i) {
      v[i] = cfg.momentum * v[i] + g[i] + cfg.weight_decay * w[i];
      w[i] -= cfg.lr * v[i];
    }
  }
}

namespace {

struct TargetSplit {
  std::vector<int> train;
  std::vector<int> eval;
};

TargetSplit split_target(int n, double frac, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) std::swap(idx[static_cast<std::size_t>(i)],
                                            idx[static_cast<std::size_t>(rng.uniform_int(0, i))]);
  const int train_count = std::max(1, static_cast<int>(std::floor(frac * n)));
  TargetSplit split;
  split.train.assign(idx.begin(), idx.begin() + train_count);
  split.eval.assign(idx.begin() + train_count, idx.end());
  return split;
}

Tensor make_batch(const std::vector<Tensor>& images, const std::vector<int>& idx, const TrainConfig& cfg,
                  CropMode mode, Rng& rng) {
  std::vector<Tensor> parts;
  parts.reserve(idx.size());
  for (int i : idx) {
    const Tensor& img = images[static_cast<std::size_t>(i)];
    if (cfg.crop_side > 0)
      parts.push_back(crop_pipeline(resize_short_side(tensor_to_image(img), cfg.resize_to), mode, cfg.crop_side, rng));
    else
      parts.push_back(img);
  }
  return stack(parts);
}

double grl_scale_at(const TrainConfig& cfg, long iter) {
  if (!cfg.grl_ramp) return cfg.grl_scale;
  const double progress = static_cast<double>(iter) / static_cast<double>(std::max<long>(1, cfg.total_iters));
  return cfg.grl_scale * (2.0 / (1.0 + std::exp(-10.0 * progress)) - 1.0);
}

MetricReport nan_metrics() {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {nan, nan, nan, nan};
}

const char* phase_name(Phase p) { return p == Phase::WarmUp ? "warmup" : "joint"; }

}  // namespace

std::vector<double> predict_scores(const Model& model, const std::vector<Tensor>& images, int batch) {
  NoGradGuard guard;
  std::vector<double> scores;
  scores.reserve(images.size());
  for (std::size_t at = 0; at < images.size(); at += static_cast<std::size_t>(batch)) {
    const std::size_t end = std::min(images.size(), at + static_cast<std::size_t>(batch));
    std::vector<Tensor> parts(images.begin() + static_cast<long>(at), images.begin() + static_cast<long>(end));
    const Var x = Var::constant(stack(parts));
    const Var pred = model.predictor.forward(model.backbone.forward(x).pooled);
    for (long i = 0; i < pred.value().size(); ++i) scores.push_back(pred.value()[i]);
  }
  return scores;
}

Tensor pooled_features(const Model& model, const std::vector<Tensor>& images, int batch) {
  NoGradGuard guard;
  std::vector<double> rows;
  int dim = 0;
  for (std::size_t at = 0; at < images.size(); at += static_cast<std::size_t>(batch)) {
    const std::size_t end = std::min(images.size(), at + static_cast<std::size_t>(batch));
    std::vector<Tensor> parts(images.begin() + static_cast<long>(at), images.begin() + static_cast<long>(end));
    const Var x = Var::constant(stack(parts));
    const Tensor& pooled = model.backbone.forward(x).pooled.value();
    dim = pooled.dim(1);
    rows.insert(rows.end(), pooled.data(), pooled.data() + pooled.size());
  }
  return Tensor({static_cast<int>(images.size()), dim}, std::move(rows));
}

namespace {

MetricReport evaluate_split(const Model& model, const LabeledSet& target, const std::vector<int>& eval_idx,
                            const LabelScaler& scaler, const TrainConfig& cfg) {
  if (eval_idx.size() < 2) return nan_metrics();
  std::vector<Tensor> images;
  std::vector<double> labels;
  images.reserve(eval_idx.size());
  for (int i : eval_idx) {
    const Tensor& img = target.images[static_cast<std::size_t>(i)];
    if (cfg.crop_side > 0) {
      Rng unused(0);
      images.push_back(
          crop_pipeline(resize_short_side(tensor_to_image(img), cfg.resize_to), CropMode::Test, cfg.crop_side, unused));
    } else {
      images.push_back(img);
    }
    labels.push_back(target.labels[static_cast<std::size_t>(i)]);
  }
  std::vector<double> preds = predict_scores(model, images);
  for (double& p : preds) p = scaler.denormalize(p);
  try {
    return compute_metrics(preds, labels);
  } catch (const std::invalid_argument&) {
    return nan_metrics();
  }
}

struct StateBundle {
  long iteration = 0;
  double window_lp = 0.0, window_ld = 0.0, window_lr = 0.0;
  long window_count = 0;
};

void save_state(const std::filesystem::path& path, const Model& model,
                const std::map<std::string, Tensor>& momenta, const Rng& rng, const StateBundle& st) {
  Archive ar;
  save_model(model, ar);
  for (const auto& [name, v] : momenta) ar.put_tensor("momentum." + name, v);
  ar.put_scalar("state.iteration", static_cast<double>(st.iteration));
  ar.put_scalar("state.window_lp", st.window_lp);
  ar.put_scalar("state.window_ld", st.window_ld);
  ar.put_scalar("state.window_lr", st.window_lr);
  ar.put_scalar("state.window_count", static_cast<double>(st.window_count));
  ar.put_string("state.train_rng", rng.save_state());
  ar.save(path);
}

void restore_state(const std::filesystem::path& path, const Model& model, std::map<std::string, Tensor>& momenta,
                   Rng& rng, StateBundle& st) {
  const Archive ar = Archive::load(path);
  for (auto& [name, p] : model.named_parameters()) {
    const Tensor& stored = ar.tensor(name);
    Var v = p;
    if (!stored.same_shape(v.value()))
      throw std::runtime_error("state tensor '" + name + "' does not match the configured model");
    v.mutable_value() = stored;
    if (ar.has_tensor("momentum." + name)) momenta[name] = ar.tensor("momentum." + name);
  }
  st.iteration = static_cast<long>(ar.scalar("state.iteration"));
  st.window_lp = ar.scalar("state.window_lp");
  st.window_ld = ar.scalar("state.window_ld");
  st.window_lr = ar.scalar("state.window_lr");
  st.window_count = static_cast<long>(ar.scalar("state.window_count"));
  rng.restore_state(ar.string("state.train_rng"));
}

}  // namespace

TrainResult train_run(const TrainConfig& cfg, const LabeledSet& source, const LabeledSet& target,
                      const TrainRunOptions& opts) {
  if (source.images.empty() || target.images.empty())
    throw std::invalid_argument("train_run: empty source or target dataset");
  if (source.images.size() != source.labels.size())
    throw std::invalid_argument("train_run: source labels missing");
  if (cfg.warmup_iters >= cfg.total_iters && cfg.total_iters > 0 && cfg.warmup_iters != 0)
    throw std::invalid_argument("train_run: warmup_iters must be below total_iters");
  if (cfg.batch_size < 2) throw std::invalid_argument("train_run: batch_size must be at least 2");

  TrainResult result;
  result.scaler = LabelScaler::fit(source.labels, cfg.label_margin);
  std::vector<double> norm_source_labels(source.labels.size());
  for (std::size_t i = 0; i < source.labels.size(); ++i)
    norm_source_labels[i] = result.scaler.normalize(source.labels[i]);
  result.stratifier = QualityStratifier::fit(norm_source_labels);

  Rng split_rng(cfg.seed ^ kSplitSalt);
  const TargetSplit split = split_target(static_cast<int>(target.images.size()), cfg.target_split, split_rng);
  result.target_eval_indices = split.eval;

  BackboneConfig bb = cfg.backbone;
  bb.in_channels = source.images[0].dim(0);
  Rng init_rng(cfg.seed ^ kInitSalt);
  result.model = Model(bb, cfg.predictor_hidden, cfg.discriminator_hidden, init_rng);
  const auto params = result.model.named_parameters();
  std::map<std::string, Tensor> momenta;

  Rng train_rng(cfg.seed);
  StateBundle st;
  if (!opts.resume_from.empty()) restore_state(opts.resume_from, result.model, momenta, train_rng, st);

  std::ofstream metrics_out;
  if (!cfg.metrics_csv.empty()) {
    metrics_out.open(cfg.metrics_csv, st.iteration == 0 ? std::ios::trunc : std::ios::app);
    if (!metrics_out) throw std::runtime_error("cannot open metrics csv " + cfg.metrics_csv);
    if (st.iteration == 0) metrics_out << "iter,phase,L_P,L_D,L_R,plcc,srocc,krocc,rmse\n";
  }
  std::ofstream mix_out;
  if (!cfg.mix_csv.empty()) {
    mix_out.open(cfg.mix_csv, st.iteration == 0 ? std::ios::trunc : std::ios::app);
    if (!mix_out) throw std::runtime_error("cannot open mix csv " + cfg.mix_csv);
    if (st.iteration == 0) mix_out << "iteration,anchor,partner,lambda,stage,y_mix\n";
  }
  std::ofstream diag_out;
  if (!cfg.diag_csv.empty()) {
    diag_out.open(cfg.diag_csv, st.iteration == 0 ? std::ios::trunc : std::ios::app);
    if (!diag_out) throw std::runtime_error("cannot open diag csv " + cfg.diag_csv);
    if (st.iteration == 0) diag_out << "iter,L_R,L_D,mean_W,nonzero_W_fraction\n";
  }

  const long stop_at = opts.stop_after > 0 ? std::min(opts.stop_after, cfg.total_iters) : cfg.total_iters;
  const int n_source = static_cast<int>(source.images.size());
  const int n_target_train = static_cast<int>(split.train.size());

  for (long iter = st.iteration; iter < stop_at; ++iter) {
    const Phase ph = phase(iter, cfg);

    std::vector<int> sidx(static_cast<std::size_t>(cfg.batch_size));
    for (int& i : sidx) i = train_rng.uniform_int(0, n_source - 1);
    std::vector<int> tidx(static_cast<std::size_t>(cfg.batch_size));
    for (int& i : tidx) i = split.train[static_cast<std::size_t>(train_rng.uniform_int(0, n_target_train - 1))];

    CompositeInputs inputs;
    inputs.source_images = Var::constant(make_batch(source.images, sidx, cfg, CropMode::Train, train_rng));
    inputs.target_images = Var::constant(make_batch(target.images, tidx, cfg, CropMode::Train, train_rng));
    inputs.source_labels.resize(sidx.size());
    for (std::size_t k = 0; k < sidx.size(); ++k)
      inputs.source_labels[k] = norm_source_labels[static_cast<std::size_t>(sidx[k])];
    inputs.phase = ph;
    inputs.grl_scale = grl_scale_at(cfg, iter);
    inputs.feature_bandwidth = cfg.feature_bandwidth;

    // Mixing is introduced with the joint phase; the warm-up trains the
    // adversarial baseline on original samples only.
    bool mixed = false;
    if (ph == Phase::Joint && cfg.mix_probability > 0.0 && (cfg.source_mixup || cfg.target_mixup)) {
      const double p = train_rng.uniform();
      mixed = p > 1.0 - cfg.mix_probability;
    }
    if (mixed) {
      MixupConfig mix_cfg;
      mix_cfg.tau = cfg.tau;
      mix_cfg.alpha = cfg.alpha;
      mix_cfg.eps_std = cfg.eps_std;
      mix_cfg.routing = cfg.routing;
      mix_cfg.uniform_partner = cfg.uniform_partner;
      if (cfg.source_mixup) {
        inputs.source_plan = plan_source_mixup(inputs.source_labels, result.stratifier, mix_cfg, train_rng, iter);
        for (const MixEvent& ev : inputs.source_plan->events) {
          result.mix_events.push_back(ev);
          if (mix_out)
            mix_out << ev.iteration << "," << ev.anchor << "," << ev.partner << "," << fmt17(ev.lambda) << ","
                    << ev.stage << "," << fmt17(ev.y_mix) << "\n";
        }
      }
      if (cfg.target_mixup) inputs.target_plan = plan_target_mixup(cfg.batch_size, cfg.alpha, train_rng);
    }
    result.mixed_history.push_back(mixed ? 1 : 0);

    result.model.zero_grad();
    const LossBreakdown loss = composite_loss(result.model, inputs, cfg);
    loss.total.backward();
    sgd_step(params, momenta, cfg, iter);

    st.window_lp += loss.loss_p;
    st.window_ld += loss.loss_d;
    st.window_lr += loss.loss_r;
    ++st.window_count;
    st.iteration = iter + 1;

    if ((iter + 1) % cfg.log_every == 0 || iter + 1 == stop_at) {
      LogRow row;
      row.iter = iter + 1;
      row.phase = ph;
      row.mixed = mixed;
      row.loss_p = st.window_lp / static_cast<double>(st.window_count);
      row.loss_d = st.window_ld / static_cast<double>(st.window_count);
      row.loss_r = st.window_lr / static_cast<double>(st.window_count);
      row.metrics = evaluate_split(result.model, target, split.eval, result.scaler, cfg);
      result.log.push_back(row);
      if (metrics_out)
        metrics_out << row.iter << "," << phase_name(row.phase) << "," << fmt17(row.loss_p) << ","
                    << fmt17(row.loss_d) << "," << fmt17(row.loss_r) << "," << fmt17(row.metrics.plcc) << ","
                    << fmt17(row.metrics.srocc) << "," << fmt17(row.metrics.krocc) << ","
                    << fmt17(row.metrics.rmse) << "\n";
      if (diag_out)
        diag_out << row.iter << "," << fmt17(loss.loss_r) << "," << fmt17(loss.loss_d) << ","
                 << fmt17(loss.mean_weight) << "," << fmt17(loss.nonzero_weight_fraction) << "\n";
      st.window_lp = st.window_ld = st.window_lr = 0.0;
      st.window_count = 0;
    }
  }

  result.final_metrics = evaluate_split(result.model, target, split.eval, result.scaler, cfg);
  if (!opts.state_out.empty()) save_state(opts.state_out, result.model, momenta, train_rng, st);
  return result;
}

TrainConfig train_config_from(const ConfigMap& map) {
  TrainConfig cfg;
  cfg.batch_size = map.get_int("batch_size", cfg.batch_size);
  cfg.total_iters = map.get_long("total_iters", cfg.total_iters);
  cfg.warmup_iters = map.get_long("warmup_iters", cfg.warmup_iters);
  cfg.lr = map.get_double("lr", cfg.lr);
  cfg.momentum = map.get_double("momentum", cfg.momentum);
  cfg.weight_decay = map.get_double("weight_decay", cfg.weight_decay);
  cfg.lambda1 = map.get_double("lambda1", cfg.lambda1);
  cfg.lambda2 = map.get_double("lambda2", cfg.lambda2);
  cfg.lambda3 = map.get_double("lambda3", cfg.lambda3);
  cfg.mix_probability = map.get_double("mix_probability", cfg.mix_probability);
  cfg.alpha = map.get_double("alpha", cfg.alpha);
  cfg.tau = map.get_double("tau", cfg.tau);
  cfg.epsilon = map.get_double("epsilon", cfg.epsilon);
  cfg.label_bandwidth = map.get_double("label_bandwidth", cfg.label_bandwidth);
  cfg.feature_bandwidth = map.get_double("feature_bandwidth", cfg.feature_bandwidth);
  cfg.grl_scale = map.get_double("grl_scale", cfg.grl_scale);
  cfg.grl_ramp = map.get_bool("grl_ramp", cfg.grl_ramp);
  const std::string routing = map.get_string("routing", "quality");
  if (routing == "quality")
    cfg.routing = StageRouting::QualityRouted;
  else if (routing == "stage1")
    cfg.routing = StageRouting::Stage1Only;
  else if (routing == "stage4")
    cfg.routing = StageRouting::Stage4Only;
  else if (routing == "stage23")
    cfg.routing = StageRouting::Stage23Only;
  else
    throw std::runtime_error("unknown routing '" + routing + "'");
  cfg.uniform_partner = map.get_bool("uniform_partner", cfg.uniform_partner);
  cfg.source_mixup = map.get_bool("source_mixup", cfg.source_mixup);
  cfg.target_mixup = map.get_bool("target_mixup", cfg.target_mixup);
  const std::string align = map.get_string("align", "rca");
  if (align == "rca")
    cfg.align = AlignKind::RankConditional;
  else if (align == "cod")
    cfg.align = AlignKind::Conditional;
  else if (align == "mmd")
    cfg.align = AlignKind::MeanDiscrepancy;
  else if (align == "none")
    cfg.align = AlignKind::None;
  else
    throw std::runtime_error("unknown align '" + align + "'");
  const std::string scope = map.get_string("rank_weight_scope", "all");
  if (scope == "all")
    cfg.rank_weight_scope = AlignConfig::Scope::All;
  else if (scope == "cross_only")
    cfg.rank_weight_scope = AlignConfig::Scope::CrossOnly;
  else
    throw std::runtime_error("unknown rank_weight_scope '" + scope + "'");
  cfg.seed = static_cast<unsigned long>(map.get_long("seed", static_cast<long>(cfg.seed)));
  cfg.log_every = map.get_long("log_every", cfg.log_every);
  cfg.label_margin = map.get_double("label_margin", cfg.label_margin);
  cfg.target_split = map.get_double("target_split", cfg.target_split);
  cfg.backbone.channels[0] = map.get_int("channels1", cfg.backbone.channels[0]);
  cfg.backbone.channels[1] = map.get_int("channels2", cfg.backbone.channels[1]);
  cfg.backbone.channels[2] = map.get_int("channels3", cfg.backbone.channels[2]);
  cfg.backbone.channels[3] = map.get_int("channels4", cfg.backbone.channels[3]);
  cfg.predictor_hidden = map.get_int("predictor_hidden", cfg.predictor_hidden);
  cfg.discriminator_hidden = map.get_int("discriminator_hidden", cfg.discriminator_hidden);
  cfg.crop_side = map.get_int("crop_side", cfg.crop_side);
  cfg.resize_to = map.get_int("resize_to", cfg.resize_to);
  cfg.metrics_csv = map.get_string("metrics_csv", cfg.metrics_csv);
  cfg.mix_csv = map.get_string("mix_csv", cfg.mix_csv);
  cfg.diag_csv = map.get_string("diag_csv", cfg.diag_csv);
  return cfg;
}

SyntheticDomainSpec synthetic_spec_from(const ConfigMap& map) {
  SyntheticDomainSpec spec;
  spec.feature_dim = map.get_int("syn_feature_dim", spec.feature_dim);
  spec.image_side = map.get_int("syn_image_side", spec.image_side);
  spec.pattern_count = map.get_int("syn_pattern_count", spec.pattern_count);
  spec.source_count = map.get_int("syn_source_count", spec.source_count);
  spec.target_count = map.get_int("syn_target_count", spec.target_count);
  spec.noise_level = map.get_double("syn_noise_level", spec.noise_level);
  spec.signal_fade = map.get_double("syn_signal_fade", spec.signal_fade);
  spec.source_style_jitter = map.get_double("syn_source_style_jitter", spec.source_style_jitter);
  spec.target_style_jitter = map.get_double("syn_target_style_jitter", spec.target_style_jitter);
  spec.gain_shift = map.get_double("syn_gain_shift", spec.gain_shift);
  spec.mean_shift = map.get_double("syn_mean_shift", spec.mean_shift);
  spec.channel_mix_angle = map.get_double("syn_channel_mix_angle", spec.channel_mix_angle);
  spec.label_lo = map.get_double("syn_label_lo", spec.label_lo);
  spec.label_hi = map.get_double("syn_label_hi", spec.label_hi);
  spec.pattern_seed = static_cast<unsigned long>(map.get_long("syn_pattern_seed", static_cast<long>(spec.pattern_seed)));
  spec.shift_seed = static_cast<unsigned long>(map.get_long("syn_shift_seed", static_cast<long>(spec.shift_seed)));
  return spec;
}

LabeledSet load_image_dir(const std::filesystem::path& dir, bool require_labels) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  std::map<std::string, double> labels;
  const std::filesystem::path labels_csv = dir / "labels.csv";
  if (std::filesystem::exists(labels_csv)) {
    std::ifstream in(labels_csv);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) continue;
      const std::string name = line.substr(0, comma);
      if (name == "name" || name == "id") continue;  // header
      labels[name] = std::stod(line.substr(comma + 1));
    }
  } else if (require_labels) {
    throw std::runtime_error("no labels.csv in " + dir.string());
  }

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no .ppm images in " + dir.string());

  LabeledSet set;
  for (const auto& f : files) {
    set.images.push_back(image_to_tensor(read_ppm(f)));
    const auto it = labels.find(f.stem().string());
    if (it != labels.end()) {
      set.labels.push_back(it->second);
    } else if (require_labels) {
      throw std::runtime_error("no label for " + f.filename().string());
    } else {
      set.labels.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return set;
}

}  // namespace qda
