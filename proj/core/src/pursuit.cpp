#include "spda/pursuit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spda/errors.hpp"

namespace spda {
namespace {

// Scores within this relative margin count as tied (lowest index wins).
constexpr double kTieTolerance = 1e-12;

bool contains(const Support& support, std::size_t atom) {
  return std::find(support.begin(), support.end(), atom) != support.end();
}

SupportFit fit_candidate(const Dictionary& dictionary, const GroupCode& previous,
                         std::size_t atom, const Matrix& group_patches,
                         const NewtonOptions& options) {
  Support extended = previous.support;
  extended.push_back(atom);
  return solve_fixed_support(dictionary, extended, group_patches, &previous, options);
}

}  // namespace

double score_atom(const Dictionary& dictionary, const GroupCode& previous, std::size_t atom,
                  const Matrix& group_patches, const NewtonOptions& options) {
  if (atom >= dictionary.size()) throw InvalidArgument("atom index out of range");
  if (contains(previous.support, atom)) {
    throw InvalidArgument("atom " + std::to_string(atom) + " is already in the support");
  }
  return fit_candidate(dictionary, previous, atom, group_patches, options).objective;
}

PursuitResult greedy_pursuit_group(const Dictionary& dictionary, const Matrix& group_patches,
                                   std::size_t max_cardinality, const Matrix* oracle_patches,
                                   const PursuitOptions& options) {
  const std::size_t n = dictionary.size();
  if (max_cardinality == 0) throw InvalidArgument("pursuit cardinality must be at least 1");
  if (max_cardinality > n) {
    throw InvalidArgument("pursuit cardinality " + std::to_string(max_cardinality) +
                          " exceeds the dictionary width " + std::to_string(n));
  }
  if (group_patches.cols() == 0) throw InvalidArgument("pursuit needs a non-empty group");
  if (group_patches.rows() != dictionary.atoms.rows()) {
    throw DimensionError("patch dimension does not match the dictionary");
  }
  if (oracle_patches != nullptr && (oracle_patches->rows() != group_patches.rows() ||
                                    oracle_patches->cols() != group_patches.cols())) {
    throw DimensionError("oracle patches must have the group's shape");
  }

  PursuitResult result;
  result.code.coeffs = Matrix::Zero(0, group_patches.cols());
  result.estimates = Matrix::Ones(group_patches.rows(), group_patches.cols());

  for (std::size_t t = 1; t <= max_cardinality; ++t) {
    std::size_t best_atom = n;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (contains(result.code.support, j)) continue;
      const double score =
          fit_candidate(dictionary, result.code, j, group_patches, options.scoring).objective;
      if (best_atom == n ||
          score < best_score - kTieTolerance * std::max(1.0, std::abs(best_score))) {
        best_score = score;
        best_atom = j;
      }
    }
    if (best_atom == n) break;

    Support next = result.code.support;
    next.push_back(best_atom);
    SupportFit refit =
        solve_fixed_support(dictionary, next, group_patches, &result.code, options.refit);
    Matrix estimates = group_estimates(dictionary, refit.code);

    if (oracle_patches != nullptr) {
      const double error = (estimates - *oracle_patches).squaredNorm();
      if (t > 1 && error > result.oracle_errors.back()) {
        result.oracle_errors.push_back(error);
        result.stopped_by = StopReason::bootstrap;
        return result;
      }
      result.oracle_errors.push_back(error);
    }
    result.code = std::move(refit.code);
    result.estimates = std::move(estimates);
    result.objective_trace.push_back(refit.objective);
    result.iterations_used = t;
  }
  result.stopped_by = StopReason::cardinality;
  return result;
}

}  // namespace spda
