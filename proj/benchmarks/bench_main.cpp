#include <benchmark/benchmark.h>

#include <random>

#include "spda/clustering.hpp"
#include "spda/learning.hpp"
#include "spda/noise.hpp"
#include "spda/pipeline.hpp"
#include "spda/pursuit.hpp"
#include "spda/test_images.hpp"

namespace {

spda::Image noisy_ridges(std::size_t size, double peak) {
  const auto clean = spda::scale_to_peak(spda::make_test_image(spda::TestImageKind::ridges, size), peak);
  return spda::sample_poisson(clean, {1});
}

spda::Matrix group_of(const spda::Image& img, std::size_t side, std::size_t count) {
  const spda::PatchMatrix p = spda::extract_patches(img, side);
  return p.data.leftCols(static_cast<Eigen::Index>(count));
}

void BM_PursuitGroup(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const spda::Dictionary D = spda::init_dictionary_dct(side);
  const spda::Matrix q = group_of(noisy_ridges(64, 2.0), side, 10);
  for (auto _ : state) benchmark::DoNotOptimize(spda::greedy_pursuit_group(D, q, k));
  state.SetLabel("d=" + std::to_string(side * side));
}
BENCHMARK(BM_PursuitGroup)->Args({4, 2})->Args({8, 2})->Args({8, 6})->Unit(benchmark::kMillisecond);

void BM_Grouping(benchmark::State& state) {
  const spda::Image img = noisy_ridges(static_cast<std::size_t>(state.range(0)), 2.0);
  spda::GroupingOptions opts;
  opts.patch_side = 8;
  opts.target_size = 10;
  for (auto _ : state) benchmark::DoNotOptimize(spda::group_patches(img, opts));
}
BENCHMARK(BM_Grouping)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_LearningRound(benchmark::State& state) {
  const spda::Image img = noisy_ridges(64, 2.0);
  const spda::Dictionary D = spda::init_dictionary_dct(8);
  spda::GroupingOptions opts;
  opts.patch_side = 8;
  opts.target_size = 10;
  const spda::GroupPartition part = spda::group_patches(img, opts);
  const spda::PatchMatrix patches = spda::extract_patches(img, 8);
  spda::LearningState base;
  base.dictionary = D;
  std::vector<spda::Matrix> groups;
  for (std::size_t g = 0; g < std::min<std::size_t>(40, part.group_count()); ++g) {
    spda::Matrix q(patches.data.rows(), static_cast<Eigen::Index>(part.groups[g].size()));
    for (std::size_t k = 0; k < part.groups[g].size(); ++k)
      q.col(static_cast<Eigen::Index>(k)) = patches.data.col(static_cast<Eigen::Index>(part.groups[g][k]));
    groups.push_back(q);
    base.codes.push_back(spda::greedy_pursuit_group(D, q, 2).code);
  }
  base.recount_usage();
  spda::LearningOptions lo;
  lo.mode = state.range(0) == 0 ? spda::LearningMode::simple : spda::LearningMode::advanced;
  for (auto _ : state) benchmark::DoNotOptimize(spda::dictionary_learning_round(base, groups, 2, lo));
}
BENCHMARK(BM_LearningRound)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DenoiseDesk(benchmark::State& state) {
  const spda::Image img = noisy_ridges(static_cast<std::size_t>(state.range(0)), 2.0);
  const spda::SpdaConfig cfg = spda::SpdaConfig::desk();
  const spda::Dictionary D = spda::init_dictionary_dct(cfg.patch_side);
  for (auto _ : state) benchmark::DoNotOptimize(spda::spda_denoise(img, D, cfg));
}
BENCHMARK(BM_DenoiseDesk)->Arg(32)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
