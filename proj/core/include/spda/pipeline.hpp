#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spda/image.hpp"
#include "spda/learning.hpp"
#include "spda/model.hpp"

namespace spda {

/// Ablation setups. I: fixed-cardinality coding only. II: I plus one
/// bootstrapped coding pass. III: simple learning (4x the rounds) with
/// reclustering. IV: advanced learning without reclustering. V: advanced
/// learning with reclustering. custom: every flag taken from the config.
enum class Setup { I, II, III, IV, V, custom };

enum class DictionarySource { dct, trained };

struct SpdaConfig {
  std::size_t patch_side = 20;
  std::size_t k_initial = 2;
  std::size_t group_size = 50;         // l without binning
  std::size_t binned_group_size = 6;   // l with binning
  int rounds = 5;                      // R
  int inner_iters_first = 2;           // L1
  int inner_iters = 20;                // L
  bool recluster_once = true;
  std::size_t kernel_side = 7;
  double kernel_sigma = 1.5;
  double epsilon = 0.0;
  bool binning = false;
  std::size_t bin_factor = 3;
  LearningMode learning_mode = LearningMode::advanced;
  Setup setup = Setup::V;
  std::size_t k_max = 0;  // 0 selects 2 * k_initial + 6
  std::uint64_t seed = 0;
  DictionarySource initial_dictionary = DictionarySource::dct;
  int score_newton_iters = 5;
  int refit_newton_iters = 25;
  int coefficient_newton_steps = 3;
  int dictionary_newton_steps = 3;

  /// Full-scale parameter set (20x20 patches, l = 50 / 6, R = 5, L1 = 2, L = 20).
  static SpdaConfig full();
  /// Desk-scale profile: 8x8 patches, l = 10, R = 2.
  static SpdaConfig desk();

  std::size_t effective_k_max() const { return k_max != 0 ? k_max : 2 * k_initial + 6; }
  /// Throws InvalidArgument on an inconsistent configuration.
  void validate() const;
};

/// What a setup actually executes once resolved against the config.
struct StagePlan {
  int rounds = 0;
  bool learning = false;
  LearningMode mode = LearningMode::advanced;
  bool recluster = false;
};
StagePlan resolve_stages(const SpdaConfig& config);

struct DenoiseReport {
  Image output;
  std::optional<double> psnr_vs_reference;
  std::vector<double> objective_trace;          // global objective after each round
  std::vector<std::size_t> width_trace;         // dictionary width after each round
  std::vector<std::size_t> objective_increases; // rounds whose objective rose by > 1e-6 relative
  std::vector<std::string> stages;              // executed stages, in order
  std::size_t group_count = 0;
  double mean_cardinality = 0.0;                // average support size of the final codes
  double wall_seconds = 0.0;
  Dictionary dictionary;                        // final dictionary
};

/// Sparse Poisson denoising of a count image.
DenoiseReport spda_denoise(const Image& noisy, const Dictionary& initial, const SpdaConfig& config,
                           const Image* reference = nullptr);

/// Bins by `bin_factor`, denoises the low-resolution image with the binned group
/// size and upscales back to the input size.
DenoiseReport spda_denoise_binned(const Image& noisy, const Dictionary& initial,
                                  const SpdaConfig& config, const Image* reference = nullptr);

/// Algebraic-inverse Anscombe round trip with no denoiser in between.
Image anscombe_identity(const Image& noisy);

/// Scales `clean` to the training peak for `peak` and runs the full pipeline on it
/// without noise, starting from the DCT dictionary. Returns the final dictionary.
Dictionary train_initial_dictionary(const Image& clean, double peak, const SpdaConfig& config);

/// Initial dictionary for a given (effective) peak according to `config.initial_dictionary`.
Dictionary initial_dictionary_for(double peak, const SpdaConfig& config);

struct ExperimentRow {
  std::string image;
  double peak = 0.0;
  std::optional<std::size_t> realization;  // empty for the per-method average row
  std::string method;
  double psnr_db = 0.0;
  double seconds = 0.0;
};

struct ExperimentSpec {
  std::string image_name = "image";
  std::vector<double> peaks;
  std::size_t realizations = 5;
  std::vector<std::string> methods{"spda", "spda-bin"};
  std::uint64_t base_seed = 0;
};

/// For every (peak, realization, method): scale, sample noise with a derived
/// seed, denoise and score. Appends one averaged row per (peak, method).
std::vector<ExperimentRow> run_experiment(const Image& clean, const ExperimentSpec& spec,
                                          const SpdaConfig& config);

/// CSV with header image,peak,realization,method,psnr_db,seconds. The seconds
/// column is left empty unless `include_timing`, keeping untimed output reproducible.
void write_results_csv(const std::vector<ExperimentRow>& rows, std::ostream& out,
                       bool include_timing);

/// JSON document whose keys mirror the SpdaConfig field names.
std::string config_to_json(const SpdaConfig& config);
/// Missing keys keep their values from `base`; unknown keys are rejected.
SpdaConfig config_from_json(const std::string& json, const SpdaConfig& base = SpdaConfig{});

/// JSON rendering of a report (without the image), used by the CLI.
std::string report_to_json(const DenoiseReport& report);

std::string to_string(Setup setup);
Setup parse_setup(const std::string& name);
std::string to_string(LearningMode mode);
LearningMode parse_learning_mode(const std::string& name);

}  // namespace spda
