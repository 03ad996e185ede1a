#include <benchmark/benchmark.h>

#include "qda/align.hpp"
#include "qda/rng.hpp"

namespace {

using namespace qda;

AlignmentBatch make_batch(int n, int d, Rng& rng) {
  AlignmentBatch batch;
  Tensor fs({n, d}), ft({n, d});
  for (long i = 0; i < fs.size(); ++i) fs[i] = rng.normal();
  for (long i = 0; i < ft.size(); ++i) ft[i] = rng.normal();
  batch.source_features = Var::param(std::move(fs));
  batch.target_features = Var::param(std::move(ft));
  batch.source_labels.resize(static_cast<std::size_t>(n));
  batch.target_labels.resize(static_cast<std::size_t>(n));
  batch.source_preds.resize(static_cast<std::size_t>(n));
  batch.target_preds.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    batch.source_labels[static_cast<std::size_t>(i)] = rng.uniform(0.1, 0.9);
    batch.target_labels[static_cast<std::size_t>(i)] = rng.uniform(0.1, 0.9);
    batch.source_preds[static_cast<std::size_t>(i)] = rng.uniform(0.1, 0.9);
    batch.target_preds[static_cast<std::size_t>(i)] = rng.uniform(0.1, 0.9);
  }
  return batch;
}

void BM_conditional_alignment(benchmark::State& state) {
  Rng rng(3);
  AlignmentBatch batch = make_batch(static_cast<int>(state.range(0)), 32, rng);
  AlignConfig cfg;
  for (auto _ : state) {
    AlignmentTerms terms = conditional_alignment_loss(batch, cfg);
    terms.loss.backward();
    benchmark::DoNotOptimize(terms.loss.value().data());
    batch.source_features.zero_grad();
    batch.target_features.zero_grad();
  }
}
BENCHMARK(BM_conditional_alignment)->Arg(8)->Arg(24)->Arg(64);

void BM_regularized_inverse(benchmark::State& state) {
  Rng rng(5);
  const int n = static_cast<int>(state.range(0));
  std::vector<double> labels(static_cast<std::size_t>(n));
  for (auto& v : labels) v = rng.uniform();
  const Tensor k = gaussian_kernel_matrix(labels, labels, 0.1);
  for (auto _ : state) {
    Tensor inv = regularized_inverse(k, 1e-3);
    benchmark::DoNotOptimize(inv.data());
  }
}
BENCHMARK(BM_regularized_inverse)->Arg(8)->Arg(24)->Arg(64);

}  // namespace
