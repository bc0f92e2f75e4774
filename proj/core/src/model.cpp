#include "spda/model.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "spda/errors.hpp"

namespace spda {
namespace {

// 1^T exp(min(z, clamp)) - q^T z for one patch.
double patch_value(const Vector& z, const Vector& q, bool* clamped) {
  double total = z.array().min(kExponentClamp).exp().sum() - q.dot(z);
  if (clamped != nullptr && (z.array() > kExponentClamp).any()) *clamped = true;
  return total;
}

void check_finite(double value, std::size_t patch_index) {
  if (!std::isfinite(value)) {
    throw NumericalOverflow("Poisson objective is not finite", patch_index);
  }
}

}  // namespace

Matrix Dictionary::restrict_to(const Support& support) const {
  Matrix out(atoms.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (support[k] >= size()) {
      throw DimensionError("support index " + std::to_string(support[k]) +
                           " out of range for a dictionary of width " + std::to_string(size()));
    }
    out.col(static_cast<Eigen::Index>(k)) = atoms.col(static_cast<Eigen::Index>(support[k]));
  }
  return out;
}

double objective(const Matrix& dict_t, const Matrix& coeffs, const Matrix& patches,
                 bool* clamped) {
  if (dict_t.cols() != coeffs.rows() || coeffs.cols() != patches.cols() ||
      dict_t.rows() != patches.rows()) {
    throw DimensionError("objective: inconsistent dictionary/coefficient/patch shapes");
  }
  if (clamped != nullptr) *clamped = false;
  double total = 0.0;
  Vector z;
  for (Eigen::Index i = 0; i < patches.cols(); ++i) {
    z.noalias() = dict_t * coeffs.col(i);
    const double v = patch_value(z, patches.col(i), clamped);
    check_finite(v, static_cast<std::size_t>(i));
    total += v;
  }
  return total;
}

Vector gradient(const Matrix& dict_t, const Vector& coeffs, const Vector& patch) {
  const Vector z = dict_t * coeffs;
  const Vector w = z.array().min(kExponentClamp).exp().matrix();
  Vector g = dict_t.transpose() * (w - patch);
  if (!g.allFinite()) throw NumericalOverflow("Poisson gradient is not finite", 0);
  return g;
}

Matrix hessian(const Matrix& dict_t, const Vector& coeffs, const Vector& patch, double ridge) {
  if (dict_t.rows() != patch.size()) throw DimensionError("hessian: patch size mismatch");
  const Vector z = dict_t * coeffs;
  const Vector w = z.array().min(kExponentClamp).exp().matrix();
  // B = diag(sqrt(w)) D_T, so H = B^T B; building only one triangle keeps H exactly symmetric.
  const Matrix b = w.array().sqrt().matrix().asDiagonal() * dict_t;
  Matrix h = Matrix::Zero(dict_t.cols(), dict_t.cols());
  h.selfadjointView<Eigen::Lower>().rankUpdate(b.transpose());
  h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
  h.diagonal().array() += ridge;
  return h;
}

Matrix exp_model(const Matrix& dict_t, const Matrix& coeffs) {
  Matrix z = dict_t * coeffs;
  return z.array().min(kExponentClamp).exp().matrix();
}

PatchSolveInfo newton_solve_patch(const Matrix& dict_t, const Vector& patch, Vector& coeffs,
                                  const NewtonOptions& options, std::size_t patch_index,
                                  std::vector<double>* objective_trace) {
  const Eigen::Index t = dict_t.cols();
  if (coeffs.size() != t || patch.size() != dict_t.rows()) {
    throw DimensionError("newton_solve_patch: inconsistent shapes");
  }
  PatchSolveInfo info;
  Vector z = dict_t * coeffs;
  double f = patch_value(z, patch, nullptr);
  check_finite(f, patch_index);
  if (objective_trace != nullptr) objective_trace->push_back(f);

  Vector w, g, delta, u, trial;
  Matrix h(t, t);
  Eigen::LLT<Matrix> llt(t);
  for (;;) {
    w = z.array().min(kExponentClamp).exp().matrix();
    g.noalias() = dict_t.transpose() * (w - patch);
    info.gradient_norm = t > 0 ? g.lpNorm<Eigen::Infinity>() : 0.0;
    if (info.gradient_norm <= options.gradient_tolerance) {
      info.converged = true;
      break;
    }
    if (info.iterations >= options.max_iterations) break;

    h.noalias() = dict_t.transpose() * w.asDiagonal() * dict_t;
    h.diagonal().array() += options.ridge;
    llt.compute(h);
    if (llt.info() != Eigen::Success) {
      throw NumericalOverflow("Newton Hessian is not positive definite", patch_index);
    }
    delta = -llt.solve(g);
    const double slope = g.dot(delta);
    u.noalias() = dict_t * delta;

    double step = 1.0;
    bool accepted = false;
    double f_trial = f;
    for (int bt = 0; bt <= options.max_backtracks; ++bt) {
      trial = z + step * u;
      f_trial = patch_value(trial, patch, nullptr);
      if (std::isfinite(f_trial) && f_trial <= f + options.armijo_c * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no representable descent left
    if (f_trial > f) {
      throw InternalError("Newton step increased the objective (patch " +
                          std::to_string(patch_index) + ")");
    }
    coeffs += step * delta;
    z.swap(trial);
    f = f_trial;
    ++info.iterations;
    if (objective_trace != nullptr) objective_trace->push_back(f);
  }
  info.objective = f;
  return info;
}

SupportFit solve_fixed_support(const Dictionary& dictionary, const Support& support,
                               const Matrix& group_patches, const GroupCode* warm_start,
                               const NewtonOptions& options) {
  if (support.empty()) throw InvalidArgument("solve_fixed_support needs a non-empty support");
  if (group_patches.cols() == 0) throw InvalidArgument("solve_fixed_support needs patches");
  if (group_patches.rows() != dictionary.atoms.rows()) {
    throw DimensionError("patch dimension does not match the dictionary");
  }
  const Matrix dict_t = dictionary.restrict_to(support);
  const auto t = static_cast<Eigen::Index>(support.size());
  const Eigen::Index m = group_patches.cols();

  SupportFit fit;
  fit.code.support = support;
  fit.code.coeffs = Matrix::Zero(t, m);
  if (warm_start != nullptr && warm_start->coeffs.size() > 0) {
    if (warm_start->coeffs.cols() != m) {
      throw DimensionError("warm start has a different number of patches");
    }
    for (std::size_t ws = 0; ws < warm_start->support.size(); ++ws) {
      for (std::size_t k = 0; k < support.size(); ++k) {
        if (support[k] == warm_start->support[ws]) {
          fit.code.coeffs.row(static_cast<Eigen::Index>(k)) =
              warm_start->coeffs.row(static_cast<Eigen::Index>(ws));
        }
      }
    }
  }

  Vector a, q;
  for (Eigen::Index i = 0; i < m; ++i) {
    a = fit.code.coeffs.col(i);
    q = group_patches.col(i);
    const PatchSolveInfo info =
        newton_solve_patch(dict_t, q, a, options, static_cast<std::size_t>(i));
    fit.code.coeffs.col(i) = a;
    fit.objective += info.objective;
    if (!info.converged) ++fit.unconverged;
  }
  return fit;
}

double group_objective(const Dictionary& dictionary, const GroupCode& code,
                       const Matrix& group_patches) {
  if (code.support.empty()) {
    // Empty support: exp(0) = 1 everywhere, linear term vanishes.
    return static_cast<double>(group_patches.rows() * group_patches.cols());
  }
  return objective(dictionary.restrict_to(code.support), code.coeffs, group_patches);
}

Matrix group_estimates(const Dictionary& dictionary, const GroupCode& code) {
  if (code.support.empty()) {
    return Matrix::Ones(dictionary.atoms.rows(), static_cast<Eigen::Index>(code.patch_count()));
  }
  return exp_model(dictionary.restrict_to(code.support), code.coeffs);
}

}  // namespace spda
