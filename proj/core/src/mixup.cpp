#include "qda/mixup.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qda {

StyleStats channel_stats_plain(const Tensor& fmap) {
  if (fmap.rank() != 3) throw std::invalid_argument("channel_stats_plain: expected a (C,H,W) map");
  const int c = fmap.dim(0);
  const long hw = static_cast<long>(fmap.dim(1)) * fmap.dim(2);
  if (hw < 1) throw std::invalid_argument("channel_stats_plain: empty spatial extent");
  StyleStats stats;
  stats.mean.resize(static_cast<std::size_t>(c));
  stats.stddev.resize(static_cast<std::size_t>(c));
  for (int j = 0; j < c; ++j) {
    const double* p = fmap.data() + static_cast<long>(j) * hw;
    double s = 0.0;
    for (long k = 0; k < hw; ++k) s += p[k];
    const double m = s / static_cast<double>(hw);
    double v = 0.0;
    for (long k = 0; k < hw; ++k) {
      const double d = p[k] - m;
      v += d * d;
    }
    stats.mean[static_cast<std::size_t>(j)] = m;
    stats.stddev[static_cast<std::size_t>(j)] = std::sqrt(v / static_cast<double>(hw));
  }
  return stats;
}

std::vector<double> partner_weights(int anchor, const std::vector<double>& labels, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("partner selection bandwidth must be positive");
  if (labels.size() < 2) throw std::invalid_argument("partner selection needs a batch of at least 2");
  if (anchor < 0 || anchor >= static_cast<int>(labels.size()))
    throw std::invalid_argument("partner selection: anchor out of range");
  std::vector<double> w(labels.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (static_cast<int>(j) == anchor) continue;
    const double d = labels[static_cast<std::size_t>(anchor)] - labels[j];
    w[j] = std::exp(-(d * d) / (2.0 * tau * tau));
    total += w[j];
  }
  if (total <= 0.0) {
    // All kernel weights underflowed; fall back to a uniform choice.
    const double u = 1.0 / static_cast<double>(labels.size() - 1);
    for (std::size_t j = 0; j < labels.size(); ++j) w[j] = (static_cast<int>(j) == anchor) ? 0.0 : u;
    return w;
  }
  for (double& v : w) v /= total;
  return w;
}

int select_partner(int anchor, const std::vector<double>& labels, double tau, Rng& rng) {
  const std::vector<double> w = partner_weights(anchor, labels, tau);
  const double u = rng.uniform();
  double acc = 0.0;
  int last = -1;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] <= 0.0) continue;
    acc += w[j];
    last = static_cast<int>(j);
    if (u < acc) return last;
  }
  return last;  // numeric slack at the top of the cdf
}

double sample_lambda(double alpha, Rng& rng) {
  if (alpha <= 0.0) throw std::invalid_argument("mixing parameter alpha must be positive");
  return rng.beta(alpha, alpha);
}

double interpolated_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

QualityStratifier QualityStratifier::fit(const std::vector<double>& labels) {
  if (labels.size() < 3) throw std::invalid_argument("stratifier fit needs at least 3 labels");
  QualityStratifier s;
  s.q33 = interpolated_quantile(labels, 0.33);
  s.q67 = interpolated_quantile(labels, 0.67);
  return s;
}

QualityStratum QualityStratifier::stratify(double y) const {
  if (y < q33) return QualityStratum::Low;
  if (y < q67) return QualityStratum::Medium;
  return QualityStratum::High;
}

int route_stage(QualityStratum stratum, Rng& rng) {
  switch (stratum) {
    case QualityStratum::High: return 1;
    case QualityStratum::Low: return 4;
    case QualityStratum::Medium: return rng.uniform_int(2, 3);
  }
  throw std::logic_error("invalid stratum");
}

Var style_mixup(const Var& anchor, const Var& partner_mean, const Var& partner_std,
                const std::vector<double>& lambdas, double eps_std) {
  if (anchor.value().rank() != 4) throw std::invalid_argument("style_mixup: anchor must be (K,C,H,W)");
  const int k = anchor.value().dim(0), c = anchor.value().dim(1);
  const int h = anchor.value().dim(2), w = anchor.value().dim(3);
  if (partner_mean.value().rank() != 2 || partner_mean.value().dim(0) != k || partner_mean.value().dim(1) != c ||
      !partner_std.value().same_shape(partner_mean.value()))
    throw std::invalid_argument("style_mixup: partner stats must be (K,C) matching the anchor");
  if (static_cast<int>(lambdas.size()) != k)
    throw std::invalid_argument("style_mixup: one lambda per anchor row required");
  for (double l : lambdas)
    if (l < 0.0 || l > 1.0) throw std::invalid_argument("style_mixup: lambda outside [0,1]");

  std::vector<double> one_minus(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) one_minus[i] = 1.0 - lambdas[i];

  const ChannelStatsVar own = channel_stats(anchor);
  const Var mixed_mean = add(scale_rows(own.mean, lambdas), scale_rows(partner_mean, one_minus));
  const Var mixed_std = add(scale_rows(own.stddev, lambdas), scale_rows(partner_std, one_minus));
  const Var standardized = div(sub(anchor, broadcast_chw(own.mean, h, w)),
                               broadcast_chw(add_scalar(own.stddev, eps_std), h, w));
  return add(mul(broadcast_chw(mixed_std, h, w), standardized), broadcast_chw(mixed_mean, h, w));
}

SourceMixPlan plan_source_mixup(const std::vector<double>& labels, const QualityStratifier& strat,
                                const MixupConfig& cfg, Rng& rng, long iteration) {
  if (labels.size() < 2) throw std::invalid_argument("source mixup needs a batch of at least 2");
  SourceMixPlan plan;
  plan.events.reserve(labels.size());
  const int n = static_cast<int>(labels.size());
  for (int i = 0; i < n; ++i) {
    MixEvent ev;
    ev.iteration = iteration;
    ev.anchor = i;
    if (cfg.uniform_partner) {
      int p = rng.uniform_int(0, n - 2);
      if (p >= i) ++p;  // skip the anchor
      ev.partner = p;
    } else {
      ev.partner = select_partner(i, labels, cfg.tau, rng);
    }
    ev.lambda = sample_lambda(cfg.alpha, rng);
    switch (cfg.routing) {
      case StageRouting::QualityRouted:
        ev.stage = route_stage(strat.stratify(labels[static_cast<std::size_t>(i)]), rng);
        break;
      case StageRouting::Stage1Only: ev.stage = 1; break;
      case StageRouting::Stage4Only: ev.stage = 4; break;
      case StageRouting::Stage23Only: ev.stage = rng.uniform_int(2, 3); break;
    }
    ev.y_mix = ev.lambda * labels[static_cast<std::size_t>(i)] +
               (1.0 - ev.lambda) * labels[static_cast<std::size_t>(ev.partner)];
    plan.events.push_back(ev);
  }
  return plan;
}

std::vector<double> mixed_labels(const SourceMixPlan& plan, const std::vector<double>& labels) {
  std::vector<double> out(labels);
  for (const MixEvent& ev : plan.events) {
    if (ev.anchor < 0 || ev.anchor >= static_cast<int>(labels.size()))
      throw std::invalid_argument("mix event anchor out of range");
    out[static_cast<std::size_t>(ev.anchor)] = ev.y_mix;
  }
  return out;
}

StageTaps source_mixup_taps(const SourceMixPlan& plan, const StagedBackbone::Forward& unmixed, double eps_std) {
  StageTaps taps;
  for (int s = 0; s < 4; ++s) {
    std::vector<int> anchors;
    std::vector<int> partners;
    std::vector<double> lambdas;
    for (const MixEvent& ev : plan.events) {
      if (ev.stage != s + 1) continue;
      anchors.push_back(ev.anchor);
      partners.push_back(ev.partner);
      lambdas.push_back(ev.lambda);
    }
    if (anchors.empty()) continue;
    const Var unmixed_stage = unmixed.stage[static_cast<std::size_t>(s)];
    taps[static_cast<std::size_t>(s)] = [anchors, partners, lambdas, unmixed_stage, eps_std](const Var& x) {
      const Var partner_maps = gather_rows(unmixed_stage, partners);
      const ChannelStatsVar pstats = channel_stats(partner_maps);
      const Var anchor_maps = gather_rows(x, anchors);
      const Var mixed = style_mixup(anchor_maps, pstats.mean, pstats.stddev, lambdas, eps_std);
      return scatter_replace_rows(x, anchors, mixed);
    };
  }
  return taps;
}

QsmResult apply_source_qsm(const StagedBackbone& backbone, const Var& x, const StagedBackbone::Forward& unmixed,
                           const std::vector<double>& labels, const QualityStratifier& strat,
                           const MixupConfig& cfg, Rng& rng, long iteration) {
  QsmResult result;
  SourceMixPlan plan = plan_source_mixup(labels, strat, cfg, rng, iteration);
  result.forward = backbone.forward(x, source_mixup_taps(plan, unmixed, cfg.eps_std));
  result.labels = mixed_labels(plan, labels);
  result.events = std::move(plan.events);
  return result;
}

TargetMixPlan plan_target_mixup(int batch, double alpha, Rng& rng) {
  TargetMixPlan plan;
  if (batch < 2) return plan;
  plan.partner.reserve(static_cast<std::size_t>(batch));
  plan.lambda.reserve(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) {
    int p = rng.uniform_int(0, batch - 2);
    if (p >= i) ++p;
    plan.partner.push_back(p);
    plan.lambda.push_back(sample_lambda(alpha, rng));
  }
  return plan;
}

Var apply_target_sm(const Var& stage4, const TargetMixPlan& plan, double eps_std) {
  if (plan.partner.empty()) return stage4;  // single-sample batch passes through
  if (stage4.value().dim(0) != static_cast<int>(plan.partner.size()))
    throw std::invalid_argument("target mixup plan does not match the batch");
  const Var partner_maps = gather_rows(stage4, plan.partner);
  const ChannelStatsVar pstats = channel_stats(partner_maps);
  return style_mixup(stage4, pstats.mean, pstats.stddev, plan.lambda, eps_std);
}

Var apply_target_sm(const Var& stage4, double alpha, double eps_std, Rng& rng) {
  return apply_target_sm(stage4, plan_target_mixup(stage4.value().dim(0), alpha, rng), eps_std);
}

}  // namespace qda
