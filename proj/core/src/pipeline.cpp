#include "spda/pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "spda/clustering.hpp"
#include "spda/errors.hpp"
#include "spda/noise.hpp"
#include "spda/parallel.hpp"
#include "spda/pursuit.hpp"
#include "spda/test_images.hpp"

namespace spda {

SpdaConfig SpdaConfig::full() { return SpdaConfig{}; }

SpdaConfig SpdaConfig::desk() {
  SpdaConfig c;
  c.patch_side = 8;
  c.group_size = 10;
  c.binned_group_size = 6;
  c.rounds = 2;
  return c;
}

void SpdaConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("invalid config: ") + what);
  };
  require(patch_side >= 1, "patch_side must be >= 1");
  require(k_initial >= 1, "k_initial must be >= 1");
  require(group_size >= 1, "group_size must be >= 1");
  require(binned_group_size >= 1, "binned_group_size must be >= 1");
  require(rounds >= 0, "rounds must be >= 0");
  require(inner_iters_first >= 1, "inner_iters_first must be >= 1");
  require(inner_iters >= 1, "inner_iters must be >= 1");
  require(kernel_side % 2 == 1, "kernel_side must be odd");
  require(kernel_sigma > 0.0, "kernel_sigma must be positive");
  require(epsilon >= 0.0, "epsilon must be >= 0");
  require(bin_factor >= 2, "bin_factor must be >= 2");
  require(effective_k_max() >= k_initial, "k_max must be >= k_initial");
  require(score_newton_iters >= 1 && refit_newton_iters >= 1, "Newton budgets must be >= 1");
  require(coefficient_newton_steps >= 1 && dictionary_newton_steps >= 1,
          "learning Newton steps must be >= 1");
}

StagePlan resolve_stages(const SpdaConfig& config) {
  StagePlan plan;
  switch (config.setup) {
    case Setup::I:
      break;
    case Setup::II:
      plan.rounds = 1;
      break;
    case Setup::III:
      plan.rounds = 4 * config.rounds;
      plan.learning = true;
      plan.mode = LearningMode::simple;
      plan.recluster = true;
      break;
    case Setup::IV:
      plan.rounds = config.rounds;
      plan.learning = true;
      plan.mode = LearningMode::advanced;
      break;
    case Setup::V:
      plan.rounds = config.rounds;
      plan.learning = true;
      plan.mode = LearningMode::advanced;
      plan.recluster = true;
      break;
    case Setup::custom:
      plan.rounds = config.rounds;
      plan.learning = config.rounds > 0;
      plan.mode = config.learning_mode;
      plan.recluster = config.recluster_once;
      break;
  }
  return plan;
}

namespace {

Matrix gather_columns(const Matrix& source, const std::vector<std::size_t>& indices) {
  Matrix out(source.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = source.col(static_cast<Eigen::Index>(indices[k]));
  }
  return out;
}

// Working state of one clustering phase.
struct Phase {
  const PatchMatrix& noisy;
  GroupPartition partition;
  std::vector<Matrix> group_patches;
  LearningState state;
};

class Denoiser {
 public:
  Denoiser(const Image& noisy, const SpdaConfig& config, DenoiseReport& report)
      : noisy_(noisy), config_(config), plan_(resolve_stages(config)), report_(report),
        patches_(extract_patches(noisy, config.patch_side)) {
    pursuit_.scoring.max_iterations = config.score_newton_iters;
    pursuit_.refit.max_iterations = config.refit_newton_iters;
    learning_.mode = plan_.mode;
    learning_.coefficient_newton_steps = config.coefficient_newton_steps;
    learning_.dictionary_newton_steps = config.dictionary_newton_steps;
  }

  Image run(const Dictionary& initial) {
    GroupingOptions grouping;
    grouping.patch_side = config_.patch_side;
    grouping.target_size = config_.group_size;
    grouping.kernel = Kernel::gaussian(config_.kernel_side, config_.kernel_sigma);
    grouping.tolerance = config_.epsilon;

    stage("grouping");
    Image estimate = run_phase(group_patches(noisy_, grouping), initial, nullptr);
    if (plan_.recluster) {
      grouping.kernel = Kernel::identity();
      stage("regroup");
      const Dictionary current = dictionary_;
      const Image oracle = estimate;
      estimate = run_phase(group_patches(oracle, grouping), current, &oracle);
    }
    report_.dictionary = dictionary_;
    return estimate;
  }

 private:
  void stage(const char* name) { report_.stages.emplace_back(name); }

  Image run_phase(GroupPartition partition, const Dictionary& dictionary, const Image* oracle) {
    Phase phase{patches_, std::move(partition), {}, {}};
    report_.group_count = phase.partition.group_count();
    phase.group_patches.reserve(phase.partition.group_count());
    for (const auto& g : phase.partition.groups) {
      phase.group_patches.push_back(gather_columns(patches_.data, g));
    }
    phase.state.dictionary = dictionary;

    Image estimate;
    if (oracle == nullptr) {
      stage("pursuit_fixed");
      estimate = pursue(phase, nullptr, std::min(config_.k_initial, dictionary.size()));
    } else {
      stage("pursuit_bootstrap");
      estimate = pursue(phase, oracle, bootstrap_cap(phase));
    }

    double previous_objective = learning_objective(phase.state, phase.group_patches);
    for (int t = 1; t <= plan_.rounds; ++t) {
      if (plan_.learning) {
        stage("learning");
        const int iters = t == 1 ? config_.inner_iters_first : config_.inner_iters;
        phase.state = dictionary_learning_round(std::move(phase.state), phase.group_patches,
                                                iters, learning_);
        phase.state = prune_unused_atoms(std::move(phase.state));
        estimate = reproject(phase);
      }
      stage("pursuit_bootstrap");
      estimate = pursue(phase, &estimate, bootstrap_cap(phase));

      const double objective = learning_objective(phase.state, phase.group_patches);
      if (objective - previous_objective > 1e-6 * std::max(1.0, std::abs(previous_objective))) {
        report_.objective_increases.push_back(report_.objective_trace.size());
      }
      report_.objective_trace.push_back(objective);
      report_.width_trace.push_back(phase.state.dictionary.size());
      previous_objective = objective;
    }
    dictionary_ = phase.state.dictionary;

    double cardinality = 0.0;
    for (const auto& code : phase.state.codes) cardinality += static_cast<double>(code.support.size());
    report_.mean_cardinality = cardinality / static_cast<double>(phase.state.codes.size());
    return estimate;
  }

  std::size_t bootstrap_cap(const Phase& phase) const {
    return std::min(config_.effective_k_max(), phase.state.dictionary.size());
  }

  // Codes every group, stores the codes in the phase and returns the re-projected image.
  Image pursue(Phase& phase, const Image* oracle, std::size_t cardinality) {
    std::optional<PatchMatrix> oracle_patches;
    if (oracle != nullptr) oracle_patches = extract_patches(*oracle, config_.patch_side);
    const std::size_t groups = phase.partition.group_count();
    std::vector<PursuitResult> results(groups);
    parallel_for(groups, [&](std::size_t g) {
      if (oracle_patches) {
        const Matrix p = gather_columns(oracle_patches->data, phase.partition.groups[g]);
        results[g] = greedy_pursuit_group(phase.state.dictionary, phase.group_patches[g],
                                          cardinality, &p, pursuit_);
      } else {
        results[g] = greedy_pursuit_group(phase.state.dictionary, phase.group_patches[g],
                                          cardinality, nullptr, pursuit_);
      }
    });
    phase.state.codes.resize(groups);
    for (std::size_t g = 0; g < groups; ++g) phase.state.codes[g] = std::move(results[g].code);
    phase.state.recount_usage();
    stage("reproject");
    return reproject(phase);
  }

  Image reproject(const Phase& phase) const {
    Matrix values(patches_.data.rows(), patches_.data.cols());
    for (std::size_t g = 0; g < phase.partition.group_count(); ++g) {
      const Matrix est = group_estimates(phase.state.dictionary, phase.state.codes[g]);
      const auto& idx = phase.partition.groups[g];
      for (std::size_t k = 0; k < idx.size(); ++k) {
        values.col(static_cast<Eigen::Index>(idx[k])) = est.col(static_cast<Eigen::Index>(k));
      }
    }
    Image out = reproject_average(values, patches_.side, patches_.positions, noisy_.rows(),
                                  noisy_.cols());
    if (!out.is_valid_intensity()) throw InternalError("re-projected estimate is not finite and non-negative");
    return out;
  }

  const Image& noisy_;
  const SpdaConfig& config_;
  StagePlan plan_;
  DenoiseReport& report_;
  PatchMatrix patches_;
  PursuitOptions pursuit_;
  LearningOptions learning_;
  Dictionary dictionary_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

DenoiseReport spda_denoise(const Image& noisy, const Dictionary& initial, const SpdaConfig& config,
                           const Image* reference) {
  config.validate();
  if (initial.dim() != config.patch_side * config.patch_side) {
    throw DimensionError("dictionary atoms have " + std::to_string(initial.dim()) +
                         " entries but patches have " +
                         std::to_string(config.patch_side * config.patch_side));
  }
  if (initial.size() == 0) throw InvalidArgument("initial dictionary is empty");
  if (!noisy.is_valid_intensity()) throw InvalidArgument("noisy image must be finite and >= 0");
  if (reference != nullptr &&
      (reference->rows() != noisy.rows() || reference->cols() != noisy.cols())) {
    throw DimensionError("reference image dimensions differ from the noisy image");
  }
  const auto start = std::chrono::steady_clock::now();
  DenoiseReport report;
  Denoiser denoiser(noisy, config, report);
  report.output = denoiser.run(initial);
  if (reference != nullptr) report.psnr_vs_reference = psnr(*reference, report.output);
  report.wall_seconds = seconds_since(start);
  return report;
}

DenoiseReport spda_denoise_binned(const Image& noisy, const Dictionary& initial,
                                  const SpdaConfig& config, const Image* reference) {
  const auto start = std::chrono::steady_clock::now();
  const Image low = bin_image(noisy, config.bin_factor);
  SpdaConfig low_config = config;
  low_config.group_size = config.binned_group_size;
  DenoiseReport report = spda_denoise(low, initial, low_config);
  report.output = upscale_bilinear(report.output, config.bin_factor, noisy.rows(), noisy.cols());
  if (reference != nullptr) report.psnr_vs_reference = psnr(*reference, report.output);
  report.stages.insert(report.stages.begin(), "bin");
  report.stages.emplace_back("upscale");
  report.wall_seconds = seconds_since(start);
  return report;
}

Image anscombe_identity(const Image& noisy) {
  return anscombe_algebraic_inverse(anscombe_forward(noisy));
}

Dictionary train_initial_dictionary(const Image& clean, double peak, const SpdaConfig& config) {
  if (clean.max_value() == clean.min_value()) {
    throw InvalidArgument("training image must not be constant");
  }
  const Image scaled = scale_to_peak(clean, training_peak_for(peak));
  return spda_denoise(scaled, init_dictionary_dct(config.patch_side), config).dictionary;
}

Dictionary initial_dictionary_for(double peak, const SpdaConfig& config) {
  if (config.initial_dictionary == DictionarySource::dct) {
    return init_dictionary_dct(config.patch_side);
  }
  const std::size_t size = std::max<std::size_t>(64, 4 * config.patch_side);
  return train_initial_dictionary(make_test_image(TestImageKind::triangles, size), peak, config);
}

std::vector<ExperimentRow> run_experiment(const Image& clean, const ExperimentSpec& spec,
                                          const SpdaConfig& config) {
  if (spec.realizations < 1) throw InvalidArgument("realizations must be >= 1");
  if (spec.peaks.empty()) throw InvalidArgument("at least one peak is required");
  for (const auto& m : spec.methods) {
    if (m != "spda" && m != "spda-bin" && m != "anscombe-identity" && m != "noisy") {
      throw InvalidArgument("unknown method '" + m + "'");
    }
  }
  const double factor2 = static_cast<double>(config.bin_factor * config.bin_factor);
  std::map<double, Dictionary> dictionaries;  // keyed by training peak
  auto dictionary = [&](double effective_peak) -> const Dictionary& {
    const double key = config.initial_dictionary == DictionarySource::dct
                           ? 0.0
                           : training_peak_for(effective_peak);
    auto it = dictionaries.find(key);
    if (it == dictionaries.end()) {
      it = dictionaries.emplace(key, initial_dictionary_for(effective_peak, config)).first;
    }
    return it->second;
  };

  std::vector<ExperimentRow> rows;
  for (double peak : spec.peaks) {
    const Image scaled = scale_to_peak(clean, peak);
    std::map<std::string, std::pair<double, double>> totals;
    for (std::size_t r = 0; r < spec.realizations; ++r) {
      const Image noisy = sample_poisson(scaled, {derive_seed(spec.base_seed, peak, r)});
      for (const auto& method : spec.methods) {
        const auto start = std::chrono::steady_clock::now();
        double value = 0.0;
        if (method == "spda") {
          value = *spda_denoise(noisy, dictionary(peak), config, &scaled).psnr_vs_reference;
        } else if (method == "spda-bin") {
          value = *spda_denoise_binned(noisy, dictionary(peak * factor2), config, &scaled)
                       .psnr_vs_reference;
        } else if (method == "anscombe-identity") {
          value = psnr(scaled, anscombe_identity(noisy));
        } else {
          value = psnr(scaled, noisy);
        }
        const double secs = seconds_since(start);
        rows.push_back({spec.image_name, peak, r, method, value, secs});
        totals[method].first += value;
        totals[method].second += secs;
      }
    }
    const double n = static_cast<double>(spec.realizations);
    for (const auto& method : spec.methods) {
      rows.push_back({spec.image_name, peak, std::nullopt, method, totals[method].first / n,
                      totals[method].second / n});
    }
  }
  return rows;
}

namespace {

// Shortest decimal that parses back to the same double.
std::string shortest(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

void write_results_csv(const std::vector<ExperimentRow>& rows, std::ostream& out,
                       bool include_timing) {
  out << "image,peak,realization,method,psnr_db,seconds\n";
  for (const auto& row : rows) {
    std::ostringstream line;
    line << row.image << ',' << shortest(row.peak) << ',';
    if (row.realization) {
      line << *row.realization;
    } else {
      line << "mean";
    }
    line << ',' << row.method << ',';
    line << std::fixed << std::setprecision(4) << row.psnr_db << ',';
    if (include_timing) line << std::setprecision(3) << row.seconds;
    out << line.str() << '\n';
  }
}

std::string to_string(Setup setup) {
  switch (setup) {
    case Setup::I: return "I";
    case Setup::II: return "II";
    case Setup::III: return "III";
    case Setup::IV: return "IV";
    case Setup::V: return "V";
    case Setup::custom: return "custom";
  }
  return "custom";
}

Setup parse_setup(const std::string& name) {
  if (name == "I") return Setup::I;
  if (name == "II") return Setup::II;
  if (name == "III") return Setup::III;
  if (name == "IV") return Setup::IV;
  if (name == "V") return Setup::V;
  if (name == "custom") return Setup::custom;
  throw InvalidArgument("unknown setup '" + name + "' (expected I, II, III, IV, V or custom)");
}

std::string to_string(LearningMode mode) {
  return mode == LearningMode::simple ? "simple" : "advanced";
}

LearningMode parse_learning_mode(const std::string& name) {
  if (name == "simple") return LearningMode::simple;
  if (name == "advanced") return LearningMode::advanced;
  throw InvalidArgument("unknown learning mode '" + name + "'");
}

namespace {

using nlohmann::json;

std::string to_string(DictionarySource s) { return s == DictionarySource::dct ? "dct" : "trained"; }

DictionarySource parse_dictionary_source(const std::string& name) {
  if (name == "dct") return DictionarySource::dct;
  if (name == "trained") return DictionarySource::trained;
  throw InvalidArgument("unknown initial_dictionary '" + name + "' (expected dct or trained)");
}

}  // namespace

std::string config_to_json(const SpdaConfig& c) {
  json j{
      {"patch_side", c.patch_side},
      {"k_initial", c.k_initial},
      {"group_size", c.group_size},
      {"binned_group_size", c.binned_group_size},
      {"rounds", c.rounds},
      {"inner_iters_first", c.inner_iters_first},
      {"inner_iters", c.inner_iters},
      {"recluster_once", c.recluster_once},
      {"kernel_side", c.kernel_side},
      {"kernel_sigma", c.kernel_sigma},
      {"epsilon", c.epsilon},
      {"binning", c.binning},
      {"bin_factor", c.bin_factor},
      {"learning_mode", to_string(c.learning_mode)},
      {"setup", to_string(c.setup)},
      {"k_max", c.k_max},
      {"seed", c.seed},
      {"initial_dictionary", to_string(c.initial_dictionary)},
      {"score_newton_iters", c.score_newton_iters},
      {"refit_newton_iters", c.refit_newton_iters},
      {"coefficient_newton_steps", c.coefficient_newton_steps},
      {"dictionary_newton_steps", c.dictionary_newton_steps},
  };
  return j.dump(2);
}

SpdaConfig config_from_json(const std::string& text, const SpdaConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("config JSON must be an object");
  SpdaConfig c = base;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "patch_side") c.patch_side = value.get<std::size_t>();
      else if (key == "k_initial") c.k_initial = value.get<std::size_t>();
      else if (key == "group_size") c.group_size = value.get<std::size_t>();
      else if (key == "binned_group_size") c.binned_group_size = value.get<std::size_t>();
      else if (key == "rounds") c.rounds = value.get<int>();
      else if (key == "inner_iters_first") c.inner_iters_first = value.get<int>();
      else if (key == "inner_iters") c.inner_iters = value.get<int>();
      else if (key == "recluster_once") c.recluster_once = value.get<bool>();
      else if (key == "kernel_side") c.kernel_side = value.get<std::size_t>();
      else if (key == "kernel_sigma") c.kernel_sigma = value.get<double>();
      else if (key == "epsilon") c.epsilon = value.get<double>();
      else if (key == "binning") c.binning = value.get<bool>();
      else if (key == "bin_factor") c.bin_factor = value.get<std::size_t>();
      else if (key == "learning_mode") c.learning_mode = parse_learning_mode(value.get<std::string>());
      else if (key == "setup") c.setup = parse_setup(value.get<std::string>());
      else if (key == "k_max") c.k_max = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "initial_dictionary") c.initial_dictionary = parse_dictionary_source(value.get<std::string>());
      else if (key == "score_newton_iters") c.score_newton_iters = value.get<int>();
      else if (key == "refit_newton_iters") c.refit_newton_iters = value.get<int>();
      else if (key == "coefficient_newton_steps") c.coefficient_newton_steps = value.get<int>();
      else if (key == "dictionary_newton_steps") c.dictionary_newton_steps = value.get<int>();
      else throw InvalidArgument("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config has a field of the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

std::string report_to_json(const DenoiseReport& report) {
  json j;
  if (report.psnr_vs_reference) {
    const double v = *report.psnr_vs_reference;
    j["psnr_db"] = std::isfinite(v) ? json(v) : json(nullptr);
  } else {
    j["psnr_db"] = nullptr;
  }
  j["objective_trace"] = report.objective_trace;
  j["width_trace"] = report.width_trace;
  j["objective_increases"] = report.objective_increases;
  j["stages"] = report.stages;
  j["group_count"] = report.group_count;
  j["mean_cardinality"] = report.mean_cardinality;
  j["dictionary_width"] = report.dictionary.size();
  j["wall_seconds"] = report.wall_seconds;
  j["rows"] = report.output.rows();
  j["cols"] = report.output.cols();
  return j.dump(2);
}

}  // namespace spda
