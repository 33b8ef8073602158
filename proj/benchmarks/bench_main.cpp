#include <benchmark/benchmark.h>

#include "signforge/attacks.hpp"
#include "signforge/augment.hpp"
#include "signforge/model.hpp"
#include "signforge/rng.hpp"
#include "signforge/synth.hpp"

using namespace signforge;

namespace {

Image random_image(int size, std::uint64_t seed) {
  Image img(size, size, 3);
  Rng rng(seed);
  for (int i = 0; i < img.size(); ++i) img.data[i] = rng.uniform();
  return img;
}

void bm_forward(benchmark::State& state) {
  const auto arch = static_cast<Architecture>(state.range(0));
  Classifier model(arch, 7, 48, 1);
  const Image x = random_image(48, 2);
  std::vector<const Image*> batch(32, &x);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict(batch));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}

void bm_input_gradients(benchmark::State& state) {
  Classifier model(Architecture::small_conv, 7, 48, 1);
  const Image x = random_image(48, 3);
  std::vector<const Image*> batch(8, &x);
  const std::vector<int> labels(8, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.input_gradients(batch, labels));
  }
  state.SetItemsProcessed(state.iterations() * 8);
}

void bm_augment_chain(benchmark::State& state) {
  Rng rng(5);
  const Image x = random_image(48, 4);
  std::vector<AugmentationChain> chains;
  for (int i = 0; i < 64; ++i) chains.push_back(sample_chain(rng));
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_chain(x, chains[i++ % chains.size()]));
  }
  state.SetItemsProcessed(state.iterations());
}

void bm_render_sample(benchmark::State& state) {
  const TrafficSignStandard standard = builtin_standard();
  SynthConfig cfg;
  cfg.scenes_per_type = 2;
  cfg.augmented_per_base = 2;
  cfg.test_scenes_per_type = 1;
  cfg.image_size = 48;
  cfg.master_seed = 6;
  const auto scenes = generate_scenes({cfg.scenes_per_type, cfg.image_size}, 6);
  const DatasetManifest m = instantiate(standard, scenes, cfg);
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_sample(m.records[i++ % m.records.size()], standard, scenes));
  }
  state.SetItemsProcessed(state.iterations());
}

void bm_exhaustive_placement(benchmark::State& state) {
  Classifier model(Architecture::small_conv, 7, 48, 7);
  const Image x = random_image(48, 8);
  const int m = static_cast<int>(state.range(0));
  const int side = patch_side(0.05, m, 48, 48);
  for (auto _ : state) {
    benchmark::DoNotOptimize(exhaustive_placement(model, x, 1, m, side, 4, {0.5, 0.5, 0.5}));
  }
}

void bm_rp4_attack(benchmark::State& state) {
  Classifier model(Architecture::small_conv, 7, 48, 9);
  const Image x = random_image(48, 10);
  AttackConfig cfg;
  cfg.m = 4;
  cfg.stride = 12;
  cfg.opt_steps = 10;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rp4_attack(model, x, 1, cfg));
  }
}

BENCHMARK(bm_forward)
    ->Arg(static_cast<int>(Architecture::small_conv))
    ->Arg(static_cast<int>(Architecture::resnet_like))
    ->Arg(static_cast<int>(Architecture::mobilenet_like))
    ->Unit(benchmark::kMillisecond);
BENCHMARK(bm_input_gradients)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_augment_chain)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_render_sample)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_exhaustive_placement)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_rp4_attack)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
