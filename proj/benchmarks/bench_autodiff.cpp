#include <benchmark/benchmark.h>

#include "qda/network.hpp"
#include "qda/train.hpp"

namespace {

using namespace qda;

Tensor random_images(int n, int c, int side, Rng& rng) {
  Tensor t({n, c, side, side});
  for (long i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

void BM_backbone_forward(benchmark::State& state) {
  Rng rng(1);
  BackboneConfig cfg;
  cfg.channels = {8, 16, 24, 32};
  const StagedBackbone bb(cfg, rng);
  const Var x = Var::constant(random_images(static_cast<int>(state.range(0)), 3, 32, rng));
  for (auto _ : state) {
    NoGradGuard guard;
    auto out = bb.forward(x);
    benchmark::DoNotOptimize(out.pooled.value().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_backbone_forward)->Arg(8)->Arg(24)->Arg(48);

void BM_composite_step(benchmark::State& state) {
  Rng rng(2);
  BackboneConfig bb_cfg;
  bb_cfg.channels = {8, 16, 24, 32};
  Model model(bb_cfg, 32, 32, rng);
  TrainConfig cfg;
  cfg.lambda2 = 0.3;
  cfg.lambda3 = 1e-4;

  const int batch = static_cast<int>(state.range(0));
  CompositeInputs inputs;
  inputs.source_images = Var::constant(random_images(batch, 3, 32, rng));
  inputs.target_images = Var::constant(random_images(batch, 3, 32, rng));
  inputs.source_labels.resize(static_cast<std::size_t>(batch));
  for (auto& v : inputs.source_labels) v = rng.uniform(0.1, 0.9);
  inputs.phase = Phase::Joint;
  inputs.feature_bandwidth = 1.0;

  for (auto _ : state) {
    model.zero_grad();
    LossBreakdown loss = composite_loss(model, inputs, cfg);
    loss.total.backward();
    benchmark::DoNotOptimize(loss.loss_p);
  }
  state.SetItemsProcessed(state.iterations() * batch * 2);
}
BENCHMARK(BM_composite_step)->Arg(8)->Arg(24);

}  // namespace
