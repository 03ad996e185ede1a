#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "qda/gradcheck.hpp"
#include "qda/train.hpp"

using namespace qda;

namespace {

// Small configuration that keeps full training loops fast in unit tests.
TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.total_iters = 30;
  cfg.warmup_iters = 10;
  cfg.log_every = 10;
  cfg.backbone.channels = {2, 3, 4, 5};
  cfg.predictor_hidden = 4;
  cfg.discriminator_hidden = 4;
  cfg.seed = 5;
  return cfg;
}

SyntheticDomainSpec tiny_spec() {
  SyntheticDomainSpec spec;
  spec.source_count = 24;
  spec.target_count = 20;
  spec.image_side = 32;
  return spec;
}

DomainPair tiny_data(unsigned long seed = 3) {
  Rng rng(seed);
  return make_synthetic_domains(tiny_spec(), rng);
}

bool logs_equal(const std::vector<LogRow>& a, const std::vector<LogRow>& b) {
  if (a.size() != b.size()) return false;
  auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].iter != b[i].iter) return false;
    if (!same(a[i].loss_p, b[i].loss_p) || !same(a[i].loss_d, b[i].loss_d) || !same(a[i].loss_r, b[i].loss_r))
      return false;
    if (!same(a[i].metrics.plcc, b[i].metrics.plcc) || !same(a[i].metrics.srocc, b[i].metrics.srocc) ||
        !same(a[i].metrics.krocc, b[i].metrics.krocc) || !same(a[i].metrics.rmse, b[i].metrics.rmse))
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("phase boundary is half open") {
  TrainConfig cfg = tiny_config();
  cfg.total_iters = 1000;
  cfg.warmup_iters = 500;
  CHECK(phase(0, cfg) == Phase::WarmUp);
  CHECK(phase(499, cfg) == Phase::WarmUp);
  CHECK(phase(500, cfg) == Phase::Joint);
  CHECK_THROWS_AS(phase(1000, cfg), std::invalid_argument);
}

TEST_CASE("label scaler round trips and its margin bounds") {
  const std::vector<double> labels = {1.0, 3.0, 5.0};
  const LabelScaler s = LabelScaler::fit(labels, 0.05);
  CHECK(s.normalize(1.0) == doctest::Approx(0.05));
  CHECK(s.normalize(5.0) == doctest::Approx(0.95));
  CHECK(s.denormalize(s.normalize(3.3)) == doctest::Approx(3.3));
}

TEST_CASE("sgd arithmetic") {
  TrainConfig cfg;
  cfg.lr = 0.1;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.0;
  Var w = Var::param(Tensor::scalar(1.0));
  std::map<std::string, Tensor> momenta;

  SUBCASE("zero gradients leave parameters unchanged") {
    w.zero_grad();
    sum(scale(w, 0.0)).backward();
    sgd_step({{"w", w}}, momenta, cfg, 0);
    CHECK(w.value().item() == 1.0);
  }

  SUBCASE("single step without momentum") {
    w.zero_grad();
    sum(w).backward();  // gradient 1
    sgd_step({{"w", w}}, momenta, cfg, 0);
    CHECK(w.value().item() == doctest::Approx(0.9));
  }

  SUBCASE("two steps with momentum 0.9 on a constant unit gradient") {
    cfg.momentum = 0.9;
    w.zero_grad();
    sum(w).backward();
    sgd_step({{"w", w}}, momenta, cfg, 0);
    w.zero_grad();
    sum(w).backward();
    sgd_step({{"w", w}}, momenta, cfg, 1);
    // v1 = 1, w = 0.9; v2 = 0.9 + 1 = 1.9, w = 0.9 - 0.19 = 0.71
    CHECK(w.value().item() == doctest::Approx(0.71));
  }
}

TEST_CASE("composite loss reduces to the supervised regression when only lambda1 is active") {
  Rng rng(7);
  BackboneConfig bb;
  bb.in_channels = 3;
  bb.channels = {2, 3, 4, 5};
  Model model(bb, 4, 4, rng);
  TrainConfig cfg = tiny_config();
  cfg.lambda2 = 0.0;
  cfg.lambda3 = 0.0;

  Tensor xs({2, 3, 32, 32});
  Tensor xt({2, 3, 32, 32});
  for (long i = 0; i < xs.size(); ++i) xs[i] = rng.normal();
  for (long i = 0; i < xt.size(); ++i) xt[i] = rng.normal();
  CompositeInputs inputs;
  inputs.source_images = Var::constant(xs);
  inputs.target_images = Var::constant(xt);
  inputs.source_labels = {0.3, 0.8};
  inputs.phase = Phase::Joint;

  const LossBreakdown loss = composite_loss(model, inputs, cfg);
  const Var direct = mse_loss(model.predictor.forward(model.backbone.forward(inputs.source_images).pooled),
                              inputs.source_labels);
  CHECK(loss.total.value().item() == doctest::Approx(direct.value().item()).epsilon(1e-12));
  CHECK(loss.loss_d == 0.0);
  CHECK(loss.loss_r == 0.0);
}

TEST_CASE("alignment term is identical across mixed and original branches") {
  Rng rng(11);
  BackboneConfig bb;
  bb.in_channels = 3;
  bb.channels = {2, 3, 4, 5};
  Model model(bb, 4, 4, rng);
  TrainConfig cfg = tiny_config();

  Tensor xs({4, 3, 32, 32});
  Tensor xt({4, 3, 32, 32});
  for (long i = 0; i < xs.size(); ++i) xs[i] = rng.normal();
  for (long i = 0; i < xt.size(); ++i) xt[i] = rng.normal();

  CompositeInputs base;
  base.source_images = Var::constant(xs);
  base.target_images = Var::constant(xt);
  base.source_labels = {0.2, 0.4, 0.6, 0.8};
  base.phase = Phase::Joint;
  base.feature_bandwidth = 1.0;
  // freeze pseudo labels and detached predictions so the two branches see
  // the same alignment inputs
  {
    NoGradGuard guard;
    const Var ft = model.backbone.forward(base.target_images).pooled;
    const Var fs = model.backbone.forward(base.source_images).pooled;
    const Tensor pt = model.predictor.forward(ft).value();
    const Tensor ps = model.predictor.forward(fs).value();
    base.pseudo_labels.assign(pt.data(), pt.data() + pt.size());
    base.source_preds.assign(ps.data(), ps.data() + ps.size());
  }

  const LossBreakdown original = composite_loss(model, base, cfg);

  CompositeInputs mixed = base;
  const QualityStratifier strat{0.35, 0.65};
  MixupConfig mix_cfg;
  Rng mix_rng(13);
  mixed.source_plan = plan_source_mixup(base.source_labels, strat, mix_cfg, mix_rng, 0);
  mixed.target_plan = plan_target_mixup(4, 1.0, mix_rng);
  const LossBreakdown with_mix = composite_loss(model, mixed, cfg);

  CHECK(with_mix.loss_r == doctest::Approx(original.loss_r).epsilon(1e-12));
  CHECK(with_mix.loss_p != original.loss_p);
}

TEST_CASE("loss weights scale their terms linearly") {
  Rng rng(17);
  BackboneConfig bb;
  bb.in_channels = 3;
  bb.channels = {2, 3, 4, 5};
  Model model(bb, 4, 4, rng);
  TrainConfig cfg = tiny_config();
  cfg.lambda1 = 1.0;

  Tensor xs({3, 3, 32, 32});
  Tensor xt({3, 3, 32, 32});
  for (long i = 0; i < xs.size(); ++i) xs[i] = rng.normal();
  for (long i = 0; i < xt.size(); ++i) xt[i] = rng.normal();
  CompositeInputs inputs;
  inputs.source_images = Var::constant(xs);
  inputs.target_images = Var::constant(xt);
  inputs.source_labels = {0.3, 0.5, 0.7};
  inputs.phase = Phase::Joint;
  inputs.feature_bandwidth = 1.0;
  {
    NoGradGuard guard;
    const Var ft = model.backbone.forward(inputs.target_images).pooled;
    const Var fs = model.backbone.forward(inputs.source_images).pooled;
    const Tensor pt = model.predictor.forward(ft).value();
    const Tensor ps = model.predictor.forward(fs).value();
    inputs.pseudo_labels.assign(pt.data(), pt.data() + pt.size());
    inputs.source_preds.assign(ps.data(), ps.data() + ps.size());
  }

  const LossBreakdown parts = composite_loss(model, inputs, cfg);
  TrainConfig scaled = cfg;
  scaled.lambda1 = 3.0;
  const double total_scaled = composite_loss(model, inputs, scaled).total.value().item();
  CHECK(total_scaled - parts.total.value().item() == doctest::Approx(2.0 * parts.loss_p).epsilon(1e-9));
}

TEST_CASE("pseudo labels come from the live predictor every batch") {
  Rng rng(19);
  BackboneConfig bb;
  bb.in_channels = 3;
  bb.channels = {2, 3, 4, 5};
  Model model(bb, 4, 4, rng);
  // constant predictor: zero weights force sigmoid(0) = 0.5
  for (auto& [name, p] : model.predictor.named_parameters()) {
    Var v = p;
    v.mutable_value().fill(0.0);
  }
  Tensor xt({3, 3, 32, 32});
  for (long i = 0; i < xt.size(); ++i) xt[i] = rng.normal();
  NoGradGuard guard;
  const Var pooled = model.backbone.forward(Var::constant(xt)).pooled;
  const Tensor preds = model.predictor.forward(pooled).value();
  for (long i = 0; i < preds.size(); ++i) CHECK(preds[i] == 0.5);
  // a fresh forward pass reproduces them exactly: nothing is cached
  const Tensor again = model.predictor.forward(model.backbone.forward(Var::constant(xt)).pooled).value();
  for (long i = 0; i < preds.size(); ++i) CHECK(again[i] == preds[i]);
}

TEST_CASE("composite gradient through mixing and reversal passes finite differences") {
  Rng rng(23);
  BackboneConfig bb;
  bb.in_channels = 2;
  bb.channels = {2, 2, 3, 3};
  Model model(bb, 3, 3, rng);
  TrainConfig cfg = tiny_config();

  Tensor xs({4, 2, 32, 32});
  Tensor xt({4, 2, 32, 32});
  for (long i = 0; i < xs.size(); ++i) xs[i] = rng.normal();
  for (long i = 0; i < xt.size(); ++i) xt[i] = rng.normal();
  CompositeInputs inputs;
  inputs.source_images = Var::constant(xs);
  inputs.target_images = Var::constant(xt);
  inputs.source_labels = {0.2, 0.4, 0.6, 0.8};
  inputs.phase = Phase::Joint;
  inputs.feature_bandwidth = 1.0;
  {
    NoGradGuard guard;
    const Var ft = model.backbone.forward(inputs.target_images).pooled;
    const Var fs = model.backbone.forward(inputs.source_images).pooled;
    const Tensor pt = model.predictor.forward(ft).value();
    const Tensor ps = model.predictor.forward(fs).value();
    inputs.pseudo_labels.assign(pt.data(), pt.data() + pt.size());
    inputs.source_preds.assign(ps.data(), ps.data() + ps.size());
  }
  const QualityStratifier strat{0.35, 0.65};
  MixupConfig mix_cfg;
  Rng mix_rng(29);
  inputs.source_plan = plan_source_mixup(inputs.source_labels, strat, mix_cfg, mix_rng, 0);
  inputs.target_plan = plan_target_mixup(4, 1.0, mix_rng);

  // Reverse-mode gradients of the trained objective. Through the reversal
  // layer the extractor descends on lp - grl_scale*ld + lr, so its finite
  // differences must be taken on that surrogate; the heads see the plain sum.
  model.zero_grad();
  composite_loss(model, inputs, cfg).total.backward();
  const auto params = model.named_parameters();
  std::vector<Tensor> analytic;
  for (const auto& [name, p] : params)
    analytic.push_back(p.has_grad() ? p.grad() : Tensor::zeros(p.value().shape()));

  auto value_for = [&](bool backbone_group) {
    const LossBreakdown parts = composite_loss(model, inputs, cfg);
    const double ld_sign = backbone_group ? -inputs.grl_scale : 1.0;
    return cfg.lambda1 * parts.loss_p + ld_sign * cfg.lambda2 * parts.loss_d + cfg.lambda3 * parts.loss_r;
  };

  const double step = 1e-5;
  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const bool backbone_group = params[pi].first.rfind("backbone.", 0) == 0;
    Var p = params[pi].second;
    Tensor& w = p.mutable_value();
    const long stride = std::max<long>(1, w.size() / 12);  // sampled entries
    for (long i = 0; i < w.size(); i += stride) {
      const double saved = w[i];
      w[i] = saved + step;
      const double up = value_for(backbone_group);
      w[i] = saved - step;
      const double down = value_for(backbone_group);
      w[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[pi][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-2});
      worst = std::max(worst, rel);
    }
  }
  INFO("worst relative error ", worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("train_run is deterministic and resumable") {
  const DomainPair data = tiny_data();
  TrainConfig cfg = tiny_config();

  const TrainResult a = train_run(cfg, data.source, data.target);
  const TrainResult b = train_run(cfg, data.source, data.target);
  CHECK(logs_equal(a.log, b.log));
  REQUIRE(a.mixed_history.size() == b.mixed_history.size());
  for (std::size_t i = 0; i < a.mixed_history.size(); ++i) REQUIRE(a.mixed_history[i] == b.mixed_history[i]);

  // resume from the midpoint state and reproduce the remaining log rows
  const auto state_path = std::filesystem::temp_directory_path() / "qda_state_test.bin";
  TrainRunOptions first_half;
  first_half.stop_after = 20;
  first_half.state_out = state_path;
  train_run(cfg, data.source, data.target, first_half);
  TrainRunOptions second_half;
  second_half.resume_from = state_path;
  const TrainResult resumed = train_run(cfg, data.source, data.target, second_half);

  std::vector<LogRow> tail(a.log.end() - static_cast<long>(resumed.log.size()), a.log.end());
  CHECK(logs_equal(tail, resumed.log));
  std::filesystem::remove(state_path);
}

TEST_CASE("warm-up trajectories ignore alignment hyperparameters") {
  const DomainPair data = tiny_data();
  TrainConfig cfg = tiny_config();
  cfg.total_iters = 12;
  cfg.warmup_iters = 10;

  const auto path_a = std::filesystem::temp_directory_path() / "qda_warma.bin";
  const auto path_b = std::filesystem::temp_directory_path() / "qda_warmb.bin";
  TrainRunOptions opts;
  opts.stop_after = 10;

  opts.state_out = path_a;
  train_run(cfg, data.source, data.target, opts);

  TrainConfig other = cfg;
  other.tau = 10.0 * cfg.tau;
  other.epsilon = 100.0 * cfg.epsilon;
  other.label_bandwidth = 5.0 * cfg.label_bandwidth;
  opts.state_out = path_b;
  train_run(other, data.source, data.target, opts);

  const Archive a = Archive::load(path_a);
  const Archive b = Archive::load(path_b);
  for (const auto& [name, t] : a.tensors()) {
    const Tensor& other_t = b.tensor(name);
    REQUIRE(t.size() == other_t.size());
    for (long i = 0; i < t.size(); ++i) REQUIRE(t[i] == other_t[i]);
  }
  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);
}

TEST_CASE("disabling mixing and alignment collapses to the adversarial baseline") {
  const DomainPair data = tiny_data();
  TrainConfig full = tiny_config();
  full.mix_probability = 0.0;
  full.source_mixup = false;
  full.target_mixup = false;
  full.lambda3 = 0.0;

  TrainConfig dann_only = tiny_config();
  dann_only.mix_probability = 0.0;
  dann_only.source_mixup = false;
  dann_only.target_mixup = false;
  dann_only.lambda3 = 0.0;
  dann_only.align = AlignKind::None;  // alignment kind is irrelevant once lambda3 is 0

  const TrainResult a = train_run(full, data.source, data.target);
  const TrainResult b = train_run(dann_only, data.source, data.target);
  CHECK(logs_equal(a.log, b.log));
}

TEST_CASE("the mixing coin respects the configured probability") {
  const DomainPair data = tiny_data();
  TrainConfig cfg = tiny_config();
  cfg.total_iters = 400;
  cfg.warmup_iters = 0;
  cfg.log_every = 400;
  cfg.lambda3 = 0.0;  // keep the loop fast; the coin logic is unaffected
  const TrainResult result = train_run(cfg, data.source, data.target);
  long mixed = 0;
  for (unsigned char f : result.mixed_history) mixed += f;
  const double rate = static_cast<double>(mixed) / static_cast<double>(result.mixed_history.size());
  CHECK(rate == doctest::Approx(0.5).epsilon(0.15));

  cfg.mix_probability = 0.0;
  const TrainResult never = train_run(cfg, data.source, data.target);
  for (unsigned char f : never.mixed_history) CHECK(f == 0);
}

TEST_CASE("train config mirrors the key-value document") {
  const ConfigMap map = ConfigMap::parse_string(
      "batch_size = 12\n"
      "total_iters = 500   # desk scale\n"
      "warmup_iters = 100\n"
      "lr = 0.002\n"
      "alpha = 0.5\n"
      "align = cod\n"
      "routing = stage23\n"
      "rank_weight_scope = cross_only\n"
      "mix_probability = 0.25\n"
      "seed = 77\n");
  const TrainConfig cfg = train_config_from(map);
  CHECK(cfg.batch_size == 12);
  CHECK(cfg.total_iters == 500);
  CHECK(cfg.warmup_iters == 100);
  CHECK(cfg.lr == 0.002);
  CHECK(cfg.alpha == 0.5);
  CHECK(cfg.align == AlignKind::Conditional);
  CHECK(cfg.routing == StageRouting::Stage23Only);
  CHECK(cfg.rank_weight_scope == AlignConfig::Scope::CrossOnly);
  CHECK(cfg.mix_probability == 0.25);
  CHECK(cfg.seed == 77);
  CHECK(cfg.momentum == 0.9);       // defaults stay put
  CHECK(cfg.weight_decay == 5e-4);
  CHECK_THROWS(train_config_from(ConfigMap::parse_string("align = banana\n")));
}

TEST_CASE("empty datasets are a config error") {
  const DomainPair data = tiny_data();
  CHECK_THROWS_AS(train_run(tiny_config(), LabeledSet{}, data.target), std::invalid_argument);
  CHECK_THROWS_AS(train_run(tiny_config(), data.source, LabeledSet{}), std::invalid_argument);
}
