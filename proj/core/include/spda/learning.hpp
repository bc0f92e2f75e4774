#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "spda/model.hpp"

namespace spda {

/// Dictionary plus one code per group; `usage[a]` counts the groups whose support holds atom a.
struct LearningState {
  Dictionary dictionary;
  std::vector<GroupCode> codes;
  std::vector<std::size_t> usage;

  void recount_usage();
};

enum class LearningMode {
  simple,    // dictionary rows only, coefficients untouched
  advanced,  // alternate coefficient and dictionary Newton steps
};

struct LearningOptions {
  LearningMode mode = LearningMode::advanced;
  int coefficient_newton_steps = 3;
  int dictionary_newton_steps = 3;
  double armijo_c = 1e-4;
  int max_backtracks = 30;
  double ridge = kHessianRidge;
  /// Relative objective increase tolerated across one alternation before failing.
  double descent_tolerance = 1e-9;
};

/// Sum of group objectives for the current state.
double learning_objective(const LearningState& state, const std::vector<Matrix>& group_patches);

/// Drops atoms no support uses and remaps support indices (relative order preserved).
/// Throws InvalidArgument if nothing would remain.
LearningState prune_unused_atoms(LearningState state);

/// Rescales every non-zero atom to unit l2 norm and scales the matching
/// coefficients by the inverse factor, so every D_T a product is unchanged.
void normalize_atoms(LearningState& state);

/// `iterations` alternations of (coefficient step, dictionary step) on fixed
/// supports, then atom renormalization. The dictionary step solves each pixel row
/// independently, since the objective is a sum over pixels. When given,
/// `objective_trace` receives the objective before the first alternation and after each one.
LearningState dictionary_learning_round(LearningState state,
                                        const std::vector<Matrix>& group_patches, int iterations,
                                        const LearningOptions& options = {},
                                        std::vector<double>* objective_trace = nullptr);

/// Row objective f_r(d_r) and its gradient over the atoms in `atoms`, for tests.
struct RowObjective {
  double value = 0.0;
  Vector gradient;
};
RowObjective dictionary_row_objective(const LearningState& state,
                                      const std::vector<Matrix>& group_patches, std::size_t row,
                                      const std::vector<std::size_t>& atoms);

/// Square (side^2 x side^2) dictionary from the separable 2-D DCT-II basis,
/// mapped elementwise through the signed log-magnitude v -> sign(v) log(1 + |v| / 0.01)
/// and column-normalized.
Dictionary init_dictionary_dct(std::size_t patch_side);

/// Peak at which the initial dictionary for `peak` is trained: 0.2, 2 or 18.
double training_peak_for(double peak);

/// Text format: "d n\n" then d lines of n decimals (17 significant digits).
void write_dictionary(const Dictionary& dictionary, const std::filesystem::path& path);
Dictionary read_dictionary(const std::filesystem::path& path);
void format_dictionary(const Dictionary& dictionary, std::ostream& out);
Dictionary parse_dictionary(std::istream& in, const std::string& source_name);

}  // namespace spda
