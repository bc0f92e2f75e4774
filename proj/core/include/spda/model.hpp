#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace spda {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Exponent arguments are clamped to this value before exp().
inline constexpr double kExponentClamp = 50.0;
/// Ridge added to every Newton Hessian.
inline constexpr double kHessianRidge = 1e-6;

/// Ordered set of atom indices; order records greedy selection order.
using Support = std::vector<std::size_t>;

/// d x n matrix of atoms.
struct Dictionary {
  Matrix atoms;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(atoms.rows()); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(atoms.cols()); }

  /// Columns listed in `support`, in support order.
  Matrix restrict_to(const Support& support) const;
};

/// Shared support of a group plus one coefficient column per patch (|T| x group size).
struct GroupCode {
  Support support;
  Matrix coeffs;

  std::size_t patch_count() const noexcept { return static_cast<std::size_t>(coeffs.cols()); }
};

/// sum_i [ 1^T exp(D_T a_i) - q_i^T D_T a_i ] over the columns of `coeffs` / `patches`.
/// When given, *clamped reports whether any exponent argument exceeded kExponentClamp.
/// Throws NumericalOverflow naming the first patch whose term is not finite.
double objective(const Matrix& dict_t, const Matrix& coeffs, const Matrix& patches,
                 bool* clamped = nullptr);

/// D_T^T (exp(D_T a) - q).
Vector gradient(const Matrix& dict_t, const Vector& coeffs, const Vector& patch);

/// D_T^T diag(exp(D_T a)) D_T + ridge I.
Matrix hessian(const Matrix& dict_t, const Vector& coeffs, const Vector& patch,
               double ridge = kHessianRidge);

/// exp(D_T A) with the exponent clamp applied.
Matrix exp_model(const Matrix& dict_t, const Matrix& coeffs);

struct NewtonOptions {
  int max_iterations = 5;
  double gradient_tolerance = 1e-6;  // infinity norm
  double armijo_c = 1e-4;
  int max_backtracks = 30;
  double ridge = kHessianRidge;
};

struct PatchSolveInfo {
  int iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
};

/// Damped Newton with Armijo backtracking on one patch. `coeffs` holds the
/// starting point on entry and the solution on return. When `objective_trace`
/// is given it receives the objective at the start and after every accepted step.
PatchSolveInfo newton_solve_patch(const Matrix& dict_t, const Vector& patch, Vector& coeffs,
                                  const NewtonOptions& options, std::size_t patch_index = 0,
                                  std::vector<double>* objective_trace = nullptr);

struct SupportFit {
  GroupCode code;
  double objective = 0.0;
  std::size_t unconverged = 0;  // patches that hit the iteration cap
};

/// Minimizes the group objective on a fixed support, patch by patch.
/// Coefficients start from `warm_start` where its support overlaps (matched by
/// atom index) and from zero elsewhere.
SupportFit solve_fixed_support(const Dictionary& dictionary, const Support& support,
                               const Matrix& group_patches, const GroupCode* warm_start,
                               const NewtonOptions& options);

/// Group objective of an existing code.
double group_objective(const Dictionary& dictionary, const GroupCode& code,
                       const Matrix& group_patches);

/// exp(D_T A) for an existing code (d x group size).
Matrix group_estimates(const Dictionary& dictionary, const GroupCode& code);

}  // namespace spda
