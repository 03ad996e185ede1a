#include <benchmark/benchmark.h>

#include "qda/projection.hpp"

namespace {

using namespace qda;

PointCloud random_cloud(int n, Rng& rng) {
  PointCloud pc;
  pc.points.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    pc.points.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                         static_cast<double>(rng.uniform_int(0, 255)), static_cast<double>(rng.uniform_int(0, 255)),
                         static_cast<double>(rng.uniform_int(0, 255))});
  return pc;
}

void BM_project_six_views(benchmark::State& state) {
  Rng rng(7);
  const PointCloud pc = random_cloud(static_cast<int>(state.range(0)), rng);
  ProjectionConfig cfg;
  cfg.face_resolution = 256;
  for (auto _ : state) {
    auto views = project_six_views(pc, cfg);
    benchmark::DoNotOptimize(views[0].pixels.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_project_six_views)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_crop_pipeline(benchmark::State& state) {
  Rng rng(9);
  Image img(512, 768);
  for (auto& v : img.pixels) v = rng.uniform();
  for (auto _ : state) {
    Tensor t = crop_pipeline(resize_short_side(img, 256), CropMode::Train, 224, rng);
    benchmark::DoNotOptimize(t.data());
  }
}
BENCHMARK(BM_crop_pipeline);

}  // namespace
