#include <benchmark/benchmark.h>

#include "tamperloc/denoise.hpp"
#include "tamperloc/patchmatch.hpp"
#include "tamperloc/prnu.hpp"
#include "tamperloc/splicing.hpp"
#include "tamperloc/synth.hpp"

using namespace tamperloc;

namespace {

RgbImage test_image(int n) { return shoot(make_camera(n, n, 0, 1), make_scene(n, n, 2), 3); }

void BM_NlmDenoise(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Plane luma = luminance(test_image(n));
  for (auto _ : state) benchmark::DoNotOptimize(nlm_denoise(luma));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_NlmDenoise)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Pce(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RgbImage img = test_image(n);
  const Plane r = noise_residual(img).plane;
  const Plane k = make_camera(n, n, 0, 1).k;
  for (auto _ : state) benchmark::DoNotOptimize(pce(r, k));
}
BENCHMARK(BM_Pce)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_CorrelationField(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SyntheticCamera cam = make_camera(n, n, 0, 1);
  const RgbImage img = test_image(n);
  const NoiseResidual r = noise_residual(img);
  const Fingerprint fp{cam.k, Plane(n, n, 1.0), 1, 0};
  for (auto _ : state) benchmark::DoNotOptimize(correlation_field(img, r, fp, 129, 1000.0));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_CorrelationField)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Nnf(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RgbImage img = test_image(n);
  for (auto _ : state) benchmark::DoNotOptimize(compute_nnf(img, NnfParams{}));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Nnf)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ResidualFeatures(benchmark::State& state) {
  const Plane block = luminance(test_image(kFeatureBlock));
  for (auto _ : state) benchmark::DoNotOptimize(residual_features(block));
}
BENCHMARK(BM_ResidualFeatures)->Unit(benchmark::kMicrosecond);

void BM_SdhMap(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RgbImage img = test_image(n);
  LinearModel m;
  m.weights.assign(kFeatureDim, 0.01);
  m.feature_mean.assign(kFeatureDim, 0.0);
  m.feature_scale.assign(kFeatureDim, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(sdh_map(img, m));
}
BENCHMARK(BM_SdhMap)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
