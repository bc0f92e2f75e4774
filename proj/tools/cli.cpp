#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "spda/errors.hpp"
#include "spda/image_io.hpp"
#include "spda/learning.hpp"
#include "spda/noise.hpp"
#include "spda/pipeline.hpp"
#include "spda/test_images.hpp"

namespace spda::cli {
namespace {

namespace fs = std::filesystem;

// Thrown for bad flag values found after parsing; reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string() + ": write failed");
}

SpdaConfig load_config(const std::string& profile, const std::string& config_path) {
  SpdaConfig base;
  if (profile == "desk") {
    base = SpdaConfig::desk();
  } else if (profile != "full") {
    throw UsageError("--profile must be 'full' or 'desk'");
  }
  if (config_path.empty()) return base;
  return config_from_json(read_text(config_path), base);
}

void require_file(const std::string& path, const char* flag) {
  if (!fs::exists(path)) throw UsageError(std::string(flag) + ": file '" + path + "' not found");
}

std::string format_db(double db) {
  if (std::isinf(db)) return "inf";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4) << db;
  return ss.str();
}

struct Options {
  // add-noise
  std::string input, output;
  double peak = 0.0;
  std::uint64_t seed = 0;
  // denoise
  std::string method = "spda", dict, config, reference, profile = "full";
  // train-dict
  std::string train_image;
  // psnr
  std::string estimate;
  // experiment
  std::string kind, name;
  std::size_t size = 64;
  std::vector<double> peaks;
  std::size_t realizations = 5;
  std::vector<std::string> methods{"spda", "spda-bin"};
  bool timing = false;
};

int cmd_add_noise(const Options& o, std::ostream& out) {
  if (!(o.peak > 0.0) || !std::isfinite(o.peak)) throw UsageError("--peak must be positive");
  require_file(o.input, "--input");
  const Image clean = scale_to_peak(read_image(o.input), o.peak);
  const Image noisy = sample_poisson(clean, {o.seed});
  write_image(noisy, o.output);
  write_float_grid(clean, o.output + ".clean");
  out << "wrote " << o.output << " (max count " << noisy.max_value() << ") and " << o.output
      << ".clean\n";
  return 0;
}

int cmd_denoise(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.method != "spda" && o.method != "spda-bin" && o.method != "anscombe-identity") {
    throw UsageError("--method must be spda, spda-bin or anscombe-identity");
  }
  require_file(o.input, "--input");
  if (!o.dict.empty()) require_file(o.dict, "--dict");
  if (!o.config.empty()) require_file(o.config, "--config");
  if (!o.reference.empty()) require_file(o.reference, "--reference");

  const SpdaConfig cfg = load_config(o.profile, o.config);
  const Image noisy = read_image(o.input);
  std::optional<Image> reference;
  if (!o.reference.empty()) reference = read_image(o.reference);

  if (o.method == "anscombe-identity") {
    const Image result = anscombe_identity(noisy);
    write_image(result, o.output);
    DenoiseReport report;
    report.output = result;
    if (reference) report.psnr_vs_reference = psnr(*reference, result);
    out << report_to_json(report) << '\n';
    return 0;
  }

  Dictionary initial;
  if (o.dict.empty()) {
    err << "warning: no --dict given, using the DCT initial dictionary\n";
    initial = init_dictionary_dct(cfg.patch_side);
  } else {
    initial = read_dictionary(o.dict);
  }
  const Image* ref = reference ? &*reference : nullptr;
  const bool binned = o.method == "spda-bin" || (o.method == "spda" && cfg.binning);
  const DenoiseReport report = binned ? spda_denoise_binned(noisy, initial, cfg, ref)
                                      : spda_denoise(noisy, initial, cfg, ref);
  write_image(report.output, o.output);
  out << report_to_json(report) << '\n';
  return 0;
}

int cmd_train_dict(const Options& o, std::ostream& out) {
  if (!(o.peak > 0.0) || !std::isfinite(o.peak)) throw UsageError("--peak must be positive");
  if (!o.train_image.empty()) require_file(o.train_image, "--image");
  if (!o.config.empty()) require_file(o.config, "--config");
  const SpdaConfig cfg = load_config(o.profile, o.config);
  const Image clean = o.train_image.empty()
                          ? make_test_image(TestImageKind::triangles,
                                            std::max<std::size_t>(64, 4 * cfg.patch_side))
                          : read_image(o.train_image);
  const Dictionary dict = train_initial_dictionary(clean, o.peak, cfg);
  write_dictionary(dict, o.output);
  out << "wrote " << o.output << " (" << dict.dim() << " x " << dict.size()
      << ", training peak " << training_peak_for(o.peak) << ")\n";
  return 0;
}

int cmd_psnr(const Options& o, std::ostream& out) {
  require_file(o.reference, "--reference");
  require_file(o.estimate, "--estimate");
  out << format_db(psnr(read_image(o.reference), read_image(o.estimate))) << '\n';
  return 0;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  if (o.input.empty() == o.kind.empty()) throw UsageError("give exactly one of --input or --kind");
  if (o.realizations < 1) throw UsageError("--realizations must be >= 1");
  for (double p : o.peaks) {
    if (!(p > 0.0) || !std::isfinite(p)) throw UsageError("every --peaks value must be positive");
  }
  if (!o.config.empty()) require_file(o.config, "--config");
  Image clean;
  ExperimentSpec spec;
  if (!o.input.empty()) {
    require_file(o.input, "--input");
    clean = read_image(o.input);
    spec.image_name = fs::path(o.input).stem().string();
  } else {
    if (o.size < 16) throw UsageError("--size must be at least 16");
    clean = make_test_image(parse_test_image_kind(o.kind), o.size);
    spec.image_name = o.kind;
  }
  if (!o.name.empty()) spec.image_name = o.name;
  spec.peaks = o.peaks;
  spec.realizations = o.realizations;
  spec.methods = o.methods;
  spec.base_seed = o.seed;
  const SpdaConfig cfg = load_config(o.profile, o.config);
  const auto rows = run_experiment(clean, spec, cfg);
  if (o.output.empty()) {
    write_results_csv(rows, out, o.timing);
  } else {
    std::ostringstream csv;
    write_results_csv(rows, csv, o.timing);
    write_text(o.output, csv.str());
  }
  return 0;
}

int cmd_make_test_image(const Options& o, std::ostream& out) {
  if (o.size < 16) throw UsageError("--size must be at least 16");
  const Image img = make_test_image(parse_test_image_kind(o.kind), o.size);
  write_image(img, o.output);
  out << "wrote " << o.output << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse Poisson denoising toolkit", "spda"};
  app.require_subcommand(1);
  Options o;

  auto* add_noise = app.add_subcommand("add-noise", "Scale an image to a peak and add Poisson noise");
  add_noise->add_option("--input", o.input, "Clean image (PGM or float grid)")->required();
  add_noise->add_option("--peak", o.peak, "Peak intensity after scaling")->required();
  add_noise->add_option("--seed", o.seed, "Noise seed");
  add_noise->add_option("--output", o.output, "Noisy image; the scaled clean image goes to <output>.clean")
      ->required();

  auto* denoise = app.add_subcommand("denoise", "Denoise a Poisson count image");
  denoise->add_option("--input", o.input, "Noisy image")->required();
  denoise->add_option("--method", o.method, "spda, spda-bin or anscombe-identity");
  denoise->add_option("--dict", o.dict, "Initial dictionary file");
  denoise->add_option("--config", o.config, "JSON config overriding the profile");
  denoise->add_option("--profile", o.profile, "Base parameters: full or desk");
  denoise->add_option("--output", o.output, "Denoised image")->required();
  denoise->add_option("--reference", o.reference, "Clean reference for PSNR");

  auto* train = app.add_subcommand("train-dict", "Train an initial dictionary on a clean image");
  train->add_option("--image", o.train_image, "Clean training image (default: procedural triangles)");
  train->add_option("--peak", o.peak, "Target peak; selects the training peak bucket")->required();
  train->add_option("--config", o.config, "JSON config overriding the profile");
  train->add_option("--profile", o.profile, "Base parameters: full or desk");
  train->add_option("--output", o.output, "Dictionary file")->required();

  auto* psnr_cmd = app.add_subcommand("psnr", "PSNR of an estimate against a reference");
  psnr_cmd->add_option("--reference", o.reference)->required();
  psnr_cmd->add_option("--estimate", o.estimate)->required();

  auto* experiment = app.add_subcommand("experiment", "PSNR table over peaks, seeds and methods");
  experiment->add_option("--input", o.input, "Clean image");
  experiment->add_option("--kind", o.kind, "Procedural image instead of --input");
  experiment->add_option("--size", o.size, "Procedural image size");
  experiment->add_option("--name", o.name, "Image name written to the CSV");
  experiment->add_option("--peaks", o.peaks, "Peak values")->required();
  experiment->add_option("--realizations", o.realizations, "Noise realizations per peak");
  experiment->add_option("--methods", o.methods, "spda, spda-bin, anscombe-identity, noisy");
  experiment->add_option("--seed", o.seed, "Base seed");
  experiment->add_option("--config", o.config, "JSON config overriding the profile");
  experiment->add_option("--profile", o.profile, "Base parameters: full or desk");
  experiment->add_option("--output", o.output, "CSV file (default: standard output)");
  experiment->add_flag("--timing", o.timing, "Fill the seconds column");

  auto* make = app.add_subcommand("make-test-image", "Write a procedural test image");
  make->add_option("--kind", o.kind, "ridges, flag-like, constant or triangles")->required();
  make->add_option("--size", o.size, "Side length (>= 16)");
  make->add_option("--output", o.output, "Output image")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (add_noise->parsed()) return cmd_add_noise(o, out);
    if (denoise->parsed()) return cmd_denoise(o, out, err);
    if (train->parsed()) return cmd_train_dict(o, out);
    if (psnr_cmd->parsed()) return cmd_psnr(o, out);
    if (experiment->parsed()) return cmd_experiment(o, out);
    if (make->parsed()) return cmd_make_test_image(o, out);
  } catch (const UsageError& e) {
    err << "spda: usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "spda: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace spda::cli
