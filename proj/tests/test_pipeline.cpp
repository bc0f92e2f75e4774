#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "spda/clustering.hpp"
#include "spda/errors.hpp"
#include "spda/noise.hpp"
#include "spda/parallel.hpp"
#include "spda/pipeline.hpp"
#include "spda/pursuit.hpp"
#include "spda/test_images.hpp"
#include "support.hpp"

using namespace spda;

namespace {

// Small, fast configuration for structural checks.
SpdaConfig tiny(Setup setup) {
  SpdaConfig c = SpdaConfig::desk();
  c.patch_side = 4;
  c.group_size = 8;
  c.binned_group_size = 4;
  c.rounds = 2;
  c.inner_iters = 3;
  c.setup = setup;
  return c;
}

Image tiny_noisy(std::uint64_t seed, double peak = 3.0) {
  return sample_poisson(scale_to_peak(make_test_image(TestImageKind::ridges, 24), peak), {seed});
}

std::set<std::string> stage_set(const DenoiseReport& r) { return {r.stages.begin(), r.stages.end()}; }

}  // namespace

TEST_CASE("constant image at peak 50 is recovered within 15 percent") {
  const Image clean(64, 64, 50.0);
  const Image noisy = sample_poisson(clean, {2024});
  const SpdaConfig cfg = SpdaConfig::desk();
  const DenoiseReport r = spda_denoise(noisy, init_dictionary_dct(cfg.patch_side), cfg, &clean);
  CHECK(r.output.min_value() >= 50.0 * 0.85);
  CHECK(r.output.max_value() <= 50.0 * 1.15);
  REQUIRE(r.psnr_vs_reference.has_value());
  CHECK(*r.psnr_vs_reference > psnr(clean, noisy));
}

TEST_CASE("setup I output is the re-projection of the first pursuit") {
  const SpdaConfig cfg = tiny(Setup::I);
  const Image noisy = tiny_noisy(1);
  const Dictionary D = init_dictionary_dct(cfg.patch_side);
  const DenoiseReport r = spda_denoise(noisy, D, cfg);

  GroupingOptions g;
  g.patch_side = cfg.patch_side;
  g.target_size = cfg.group_size;
  const GroupPartition part = group_patches(noisy, g);
  const PatchMatrix patches = extract_patches(noisy, cfg.patch_side);
  PatchMatrix est = patches;
  for (const auto& group : part.groups) {
    Matrix q(patches.data.rows(), static_cast<Eigen::Index>(group.size()));
    for (std::size_t k = 0; k < group.size(); ++k) q.col(static_cast<Eigen::Index>(k)) = patches.data.col(static_cast<Eigen::Index>(group[k]));
    const PursuitResult pr = greedy_pursuit_group(D, q, cfg.k_initial);
    for (std::size_t k = 0; k < group.size(); ++k) est.data.col(static_cast<Eigen::Index>(group[k])) = pr.estimates.col(static_cast<Eigen::Index>(k));
  }
  CHECK(r.output == reproject_average(est, noisy.rows(), noisy.cols()));
  CHECK(r.objective_trace.empty());
  CHECK(r.group_count == part.group_count());
  CHECK(r.mean_cardinality == 2.0);
}

TEST_CASE("setups form a refinement chain of executed stages") {
  const Image noisy = tiny_noisy(2);
  const Dictionary D = init_dictionary_dct(4);
  std::map<Setup, std::set<std::string>> stages;
  for (Setup s : {Setup::I, Setup::II, Setup::III, Setup::IV, Setup::V}) {
    SpdaConfig cfg = tiny(s);
    cfg.rounds = 1;
    stages[s] = stage_set(spda_denoise(noisy, D, cfg));
  }
  auto subset = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  };
  CHECK(subset(stages[Setup::I], stages[Setup::II]));
  CHECK(stages[Setup::I] != stages[Setup::II]);
  CHECK(subset(stages[Setup::II], stages[Setup::III]));
  CHECK(subset(stages[Setup::II], stages[Setup::IV]));
  CHECK(subset(stages[Setup::III], stages[Setup::V]));
  CHECK(subset(stages[Setup::IV], stages[Setup::V]));
  CHECK(stages[Setup::I].count("learning") == 0);
  CHECK(stages[Setup::II].count("learning") == 0);
  CHECK(stages[Setup::IV].count("regroup") == 0);
  CHECK(stages[Setup::V].count("regroup") == 1);
}

TEST_CASE("traces have one entry per executed round") {
  const Image noisy = tiny_noisy(3);
  const Dictionary D = init_dictionary_dct(4);
  const DenoiseReport v = spda_denoise(noisy, D, tiny(Setup::V));
  CHECK(v.objective_trace.size() == 4);  // two rounds in each of the two phases
  CHECK(v.width_trace.size() == 4);
  // Width only shrinks within a phase.
  CHECK(v.width_trace[1] <= v.width_trace[0]);
  CHECK(v.width_trace[3] <= v.width_trace[2]);
  CHECK(v.dictionary.size() == v.width_trace.back());
  CHECK(v.output.is_valid_intensity());

  const DenoiseReport iv = spda_denoise(noisy, D, tiny(Setup::IV));
  CHECK(iv.objective_trace.size() == 2);
  const DenoiseReport iii = spda_denoise(noisy, D, tiny(Setup::III));
  CHECK(iii.objective_trace.size() == 16);
}

TEST_CASE("denoising is deterministic and independent of the worker count") {
  const Image noisy = tiny_noisy(4);
  const Dictionary D = init_dictionary_dct(4);
  const std::size_t before = thread_count();
  set_thread_count(1);
  const DenoiseReport a = spda_denoise(noisy, D, tiny(Setup::V));
  set_thread_count(3);
  const DenoiseReport b = spda_denoise(noisy, D, tiny(Setup::V));
  set_thread_count(before);
  CHECK(a.output == b.output);
  CHECK(a.objective_trace == b.objective_trace);
  CHECK(a.width_trace == b.width_trace);
  CHECK(a.stages == b.stages);
  CHECK(a.dictionary.atoms == b.dictionary.atoms);
}

TEST_CASE("binned denoising works on the low-resolution image") {
  const Image noisy = tiny_noisy(5, 0.5);
  const SpdaConfig cfg = tiny(Setup::V);
  const DenoiseReport r = spda_denoise_binned(noisy, init_dictionary_dct(4), cfg);
  CHECK(r.output.rows() == noisy.rows());
  CHECK(r.output.cols() == noisy.cols());
  CHECK(r.stages.front() == "bin");
  CHECK(r.stages.back() == "upscale");
  CHECK(r.output.is_valid_intensity());
  CHECK(bin_image(Image(24, 24, 0.5), 3).max_value() == doctest::Approx(4.5));
}

TEST_CASE("denoise argument checks") {
  const Image noisy = tiny_noisy(6);
  CHECK_THROWS_AS(spda_denoise(noisy, init_dictionary_dct(5), tiny(Setup::V)), DimensionError);
  const Image wrong(10, 10, 1.0);
  CHECK_THROWS_AS(spda_denoise(noisy, init_dictionary_dct(4), tiny(Setup::V), &wrong), DimensionError);
  SpdaConfig bad = tiny(Setup::V);
  bad.group_size = 0;
  CHECK_THROWS_AS(spda_denoise(noisy, init_dictionary_dct(4), bad), InvalidArgument);
}

TEST_CASE("config defaults, profiles and JSON") {
  const SpdaConfig full = SpdaConfig::full();
  CHECK(full.patch_side == 20);
  CHECK(full.k_initial == 2);
  CHECK(full.group_size == 50);
  CHECK(full.binned_group_size == 6);
  CHECK(full.rounds == 5);
  CHECK(full.inner_iters_first == 2);
  CHECK(full.inner_iters == 20);
  CHECK(full.recluster_once);
  CHECK(full.epsilon == 0.0);
  CHECK(full.bin_factor == 3);
  CHECK(full.effective_k_max() == 10);

  const SpdaConfig desk = SpdaConfig::desk();
  CHECK(desk.patch_side == 8);
  CHECK(desk.group_size == 10);
  CHECK(desk.rounds == 2);

  SpdaConfig custom = desk;
  custom.setup = Setup::custom;
  custom.learning_mode = LearningMode::simple;
  custom.kernel_sigma = 0.75;
  custom.seed = 99;
  const SpdaConfig back = config_from_json(config_to_json(custom));
  CHECK(config_to_json(back) == config_to_json(custom));

  CHECK(config_from_json(R"({"rounds": 3})", desk).patch_side == 8);
  CHECK_THROWS_AS(config_from_json(R"({"roundz": 3})"), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(R"({"rounds": "three"})"), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(R"({"setup": "VI"})"), InvalidArgument);
  CHECK_THROWS_AS(config_from_json("{"), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(R"({"kernel_side": 4})"), InvalidArgument);
}

TEST_CASE("custom setup follows the config flags") {
  SpdaConfig c = tiny(Setup::custom);
  c.rounds = 3;
  c.recluster_once = false;
  c.learning_mode = LearningMode::simple;
  const StagePlan p = resolve_stages(c);
  CHECK(p.rounds == 3);
  CHECK(p.learning);
  CHECK(p.mode == LearningMode::simple);
  CHECK_FALSE(p.recluster);
  const StagePlan iii = resolve_stages(tiny(Setup::III));
  CHECK(iii.rounds == 8);
  CHECK(iii.recluster);
}

TEST_CASE("experiment rows and CSV") {
  const Image clean = make_test_image(TestImageKind::ridges, 24);
  ExperimentSpec spec;
  spec.image_name = "ridges";
  spec.peaks = {1.0, 4.0};
  spec.realizations = 2;
  spec.methods = {"noisy", "anscombe-identity", "spda"};
  spec.base_seed = 7;
  const auto rows = run_experiment(clean, spec, tiny(Setup::IV));
  CHECK(rows.size() == 2 * (2 * 3 + 3));
  for (const auto& r : rows) {
    if (r.method == "anscombe-identity") {
      const auto noisy = std::find_if(rows.begin(), rows.end(), [&](const ExperimentRow& o) {
        return o.method == "noisy" && o.peak == r.peak && o.realization == r.realization;
      });
      CHECK(r.psnr_db == doctest::Approx(noisy->psnr_db).epsilon(1e-9));
    }
  }
  std::ostringstream a, b;
  write_results_csv(rows, a, false);
  write_results_csv(run_experiment(clean, spec, tiny(Setup::IV)), b, false);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("image,peak,realization,method,psnr_db,seconds\n", 0) == 0);
  CHECK(a.str().find("ridges,1,mean,spda,") != std::string::npos);

  ExperimentSpec bad = spec;
  bad.realizations = 0;
  CHECK_THROWS_AS(run_experiment(clean, bad, tiny(Setup::IV)), InvalidArgument);
  bad = spec;
  bad.methods = {"bm3d"};
  CHECK_THROWS_AS(run_experiment(clean, bad, tiny(Setup::IV)), InvalidArgument);
}

TEST_CASE("trained initial dictionaries") {
  SpdaConfig c = tiny(Setup::IV);
  c.rounds = 1;
  c.initial_dictionary = DictionarySource::trained;
  const Dictionary D = initial_dictionary_for(1.0, c);
  CHECK(D.dim() == 16);
  CHECK(D.size() >= 1);
  CHECK(D.size() <= 16);
  CHECK(D.atoms.allFinite());
  CHECK_THROWS_AS(train_initial_dictionary(Image(16, 16, 3.0), 1.0, c), InvalidArgument);
}

TEST_CASE("anscombe identity returns the noisy image") {
  testing::Gen gen(3);
  Image counts(6, 6, 0.0);
  for (double& v : counts.pixels()) v = static_cast<double>(gen.poisson(2.0));
  const Image back = anscombe_identity(counts);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    CHECK(back.pixels()[k] == doctest::Approx(counts.pixels()[k]).epsilon(1e-12));
  }
}

TEST_CASE("report JSON") {
  DenoiseReport r;
  r.output = Image(2, 3, 1.0);
  r.psnr_vs_reference = 21.5;
  r.objective_trace = {3.0, 2.0};
  const std::string json = report_to_json(r);
  CHECK(json.find("\"psnr_db\": 21.5") != std::string::npos);
  CHECK(json.find("\"objective_trace\"") != std::string::npos);
}
