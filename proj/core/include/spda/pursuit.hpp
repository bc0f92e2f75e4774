#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "spda/model.hpp"

namespace spda {

enum class StopReason { cardinality, bootstrap };

struct PursuitOptions {
  /// Newton budget when scoring one candidate atom (warm started).
  NewtonOptions scoring{.max_iterations = 5};
  /// Newton budget for the refit after an atom is admitted.
  NewtonOptions refit{.max_iterations = 25};
};

struct PursuitResult {
  GroupCode code;
  Matrix estimates;  // exp(D a_i), d x group size
  std::size_t iterations_used = 0;
  StopReason stopped_by = StopReason::cardinality;
  /// Group objective after each admitted atom (index t-1 for iteration t).
  std::vector<double> objective_trace;
  /// Bootstrap errors e_t, one per completed iteration (empty without an oracle).
  std::vector<double> oracle_errors;
};

/// Minimized group objective over support T_prev + {atom}, warm started from
/// `previous` (the T_prev solution; new coefficient starts at zero).
double score_atom(const Dictionary& dictionary, const GroupCode& previous, std::size_t atom,
                  const Matrix& group_patches, const NewtonOptions& options);

/// Greedy joint-sparse Poisson pursuit for one group.
///
/// Each iteration scores every atom outside the current support, admits the
/// lowest score (ties to the lowest index) for all patches at once and refits the
/// coefficients. With `oracle_patches` the error e_t = sum ||exp(D a_i) - p_i||^2 is
/// tracked and the pursuit returns iteration t-1 as soon as e_t > e_{t-1} (t > 1).
PursuitResult greedy_pursuit_group(const Dictionary& dictionary, const Matrix& group_patches,
                                   std::size_t max_cardinality,
                                   const Matrix* oracle_patches = nullptr,
                                   const PursuitOptions& options = {});

}  // namespace spda
