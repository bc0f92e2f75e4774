#include "spda/learning.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>

#include "spda/errors.hpp"
#include "spda/parallel.hpp"

namespace spda {

void LearningState::recount_usage() {
  usage.assign(dictionary.size(), 0);
  for (const auto& code : codes) {
    for (std::size_t a : code.support) {
      if (a >= usage.size()) {
        throw DimensionError("support index " + std::to_string(a) +
                             " exceeds the dictionary width " + std::to_string(usage.size()));
      }
      ++usage[a];
    }
  }
}

double learning_objective(const LearningState& state, const std::vector<Matrix>& group_patches) {
  if (group_patches.size() != state.codes.size()) {
    throw DimensionError("one patch matrix per group code is required");
  }
  double total = 0.0;
  for (std::size_t g = 0; g < state.codes.size(); ++g) {
    total += group_objective(state.dictionary, state.codes[g], group_patches[g]);
  }
  return total;
}

LearningState prune_unused_atoms(LearningState state) {
  state.recount_usage();
  const std::size_t n = state.dictionary.size();
  std::vector<std::size_t> remap(n, n);
  std::size_t kept = 0;
  for (std::size_t a = 0; a < n; ++a) {
    if (state.usage[a] > 0) remap[a] = kept++;
  }
  if (kept == 0) throw InvalidArgument("pruning would leave an empty dictionary");
  if (kept == n) return state;

  Matrix atoms(state.dictionary.atoms.rows(), static_cast<Eigen::Index>(kept));
  for (std::size_t a = 0; a < n; ++a) {
    if (remap[a] != n) {
      atoms.col(static_cast<Eigen::Index>(remap[a])) =
          state.dictionary.atoms.col(static_cast<Eigen::Index>(a));
    }
  }
  state.dictionary.atoms = std::move(atoms);
  for (auto& code : state.codes) {
    for (std::size_t& a : code.support) a = remap[a];
  }
  state.recount_usage();
  return state;
}

void normalize_atoms(LearningState& state) {
  Matrix& atoms = state.dictionary.atoms;
  for (Eigen::Index a = 0; a < atoms.cols(); ++a) {
    const double norm = atoms.col(a).norm();
    if (!(norm > 0.0) || !std::isfinite(norm) || norm == 1.0) continue;
    atoms.col(a) /= norm;
    for (auto& code : state.codes) {
      for (std::size_t k = 0; k < code.support.size(); ++k) {
        if (code.support[k] == static_cast<std::size_t>(a)) {
          code.coeffs.row(static_cast<Eigen::Index>(k)) *= norm;
        }
      }
    }
  }
}

namespace {

// Read-only view of everything one pixel-row Newton solve needs.
struct RowContext {
  const LearningState& state;
  const std::vector<Matrix>& patches;
  std::vector<std::size_t> active;  // atoms being updated
  std::vector<Eigen::Index> slot;   // atom -> position in `active`, -1 if frozen
};

RowContext make_row_context(const LearningState& state, const std::vector<Matrix>& patches) {
  RowContext ctx{state, patches, {}, {}};
  ctx.slot.assign(state.dictionary.size(), -1);
  for (const auto& code : state.codes) {
    for (std::size_t a : code.support) {
      if (ctx.slot[a] < 0) {
        ctx.slot[a] = 0;
        ctx.active.push_back(a);
      }
    }
  }
  std::sort(ctx.active.begin(), ctx.active.end());
  for (std::size_t k = 0; k < ctx.active.size(); ++k) {
    ctx.slot[ctx.active[k]] = static_cast<Eigen::Index>(k);
  }
  return ctx;
}

// Per-group exponent arguments z_g = A_g^T d_{r,T_g}.
std::vector<Vector> row_arguments(const RowContext& ctx, const Vector& row) {
  std::vector<Vector> z(ctx.state.codes.size());
  for (std::size_t g = 0; g < ctx.state.codes.size(); ++g) {
    const GroupCode& code = ctx.state.codes[g];
    Vector d_t(static_cast<Eigen::Index>(code.support.size()));
    for (std::size_t k = 0; k < code.support.size(); ++k) {
      d_t[static_cast<Eigen::Index>(k)] = row[static_cast<Eigen::Index>(code.support[k])];
    }
    z[g] = code.coeffs.transpose() * d_t;
  }
  return z;
}

double row_value(const RowContext& ctx, const std::vector<Vector>& z, std::size_t r) {
  double total = 0.0;
  for (std::size_t g = 0; g < z.size(); ++g) {
    if (z[g].size() == 0) continue;
    total += z[g].array().min(kExponentClamp).exp().sum() -
             ctx.patches[g].row(static_cast<Eigen::Index>(r)).dot(z[g]);
  }
  return total;
}

void row_derivatives(const RowContext& ctx, const std::vector<Vector>& z, std::size_t r,
                     Vector& grad, Matrix* hess) {
  const auto u = static_cast<Eigen::Index>(ctx.active.size());
  grad = Vector::Zero(u);
  if (hess != nullptr) *hess = Matrix::Zero(u, u);
  Vector w, residual, gg;
  Matrix hg;
  for (std::size_t g = 0; g < z.size(); ++g) {
    const GroupCode& code = ctx.state.codes[g];
    if (code.support.empty()) continue;
    w = z[g].array().min(kExponentClamp).exp().matrix();
    residual = w - ctx.patches[g].row(static_cast<Eigen::Index>(r)).transpose();
    gg.noalias() = code.coeffs * residual;
    if (hess != nullptr) hg.noalias() = code.coeffs * w.asDiagonal() * code.coeffs.transpose();
    for (std::size_t k = 0; k < code.support.size(); ++k) {
      const Eigen::Index sk = ctx.slot[code.support[k]];
      grad[sk] += gg[static_cast<Eigen::Index>(k)];
      if (hess == nullptr) continue;
      for (std::size_t l = 0; l < code.support.size(); ++l) {
        (*hess)(sk, ctx.slot[code.support[l]]) +=
            hg(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
      }
    }
  }
}

// Damped Newton with Armijo on one dictionary row; returns the updated row.
Vector solve_row(const RowContext& ctx, std::size_t r, const LearningOptions& options) {
  Vector row = ctx.state.dictionary.atoms.row(static_cast<Eigen::Index>(r)).transpose();
  std::vector<Vector> z = row_arguments(ctx, row);
  double f = row_value(ctx, z, r);
  if (!std::isfinite(f)) throw NumericalOverflow("dictionary row objective is not finite", r);

  const auto u = static_cast<Eigen::Index>(ctx.active.size());
  Vector grad, delta;
  Matrix hess;
  Eigen::LLT<Matrix> llt(u);
  std::vector<Vector> step_z(z.size()), trial(z.size());
  for (int it = 0; it < options.dictionary_newton_steps; ++it) {
    row_derivatives(ctx, z, r, grad, &hess);
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-12) break;
    hess.diagonal().array() += options.ridge;
    llt.compute(hess);
    if (llt.info() != Eigen::Success) {
      throw NumericalOverflow("dictionary row Hessian is not positive definite", r);
    }
    delta = -llt.solve(grad);
    const double slope = grad.dot(delta);

    Vector full_delta = Vector::Zero(row.size());
    for (Eigen::Index k = 0; k < u; ++k) {
      full_delta[static_cast<Eigen::Index>(ctx.active[static_cast<std::size_t>(k)])] = delta[k];
    }
    step_z = row_arguments(ctx, full_delta);

    double step = 1.0;
    bool accepted = false;
    double f_trial = f;
    for (int bt = 0; bt <= options.max_backtracks; ++bt) {
      for (std::size_t g = 0; g < z.size(); ++g) trial[g] = z[g] + step * step_z[g];
      f_trial = row_value(ctx, trial, r);
      if (std::isfinite(f_trial) && f_trial <= f + options.armijo_c * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    row += step * full_delta;
    z.swap(trial);
    f = f_trial;
  }
  return row;
}

void dictionary_step(LearningState& state, const std::vector<Matrix>& group_patches,
                     const LearningOptions& options) {
  const RowContext ctx = make_row_context(state, group_patches);
  if (ctx.active.empty()) return;
  const std::size_t d = state.dictionary.dim();
  std::vector<Vector> rows(d);
  parallel_for(d, [&](std::size_t r) { rows[r] = solve_row(ctx, r, options); });
  for (std::size_t r = 0; r < d; ++r) {
    state.dictionary.atoms.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  }
}

void coefficient_step(LearningState& state, const std::vector<Matrix>& group_patches,
                      const LearningOptions& options) {
  NewtonOptions newton;
  newton.max_iterations = options.coefficient_newton_steps;
  newton.armijo_c = options.armijo_c;
  newton.max_backtracks = options.max_backtracks;
  newton.ridge = options.ridge;
  parallel_for(state.codes.size(), [&](std::size_t g) {
    GroupCode& code = state.codes[g];
    if (code.support.empty()) return;
    SupportFit fit =
        solve_fixed_support(state.dictionary, code.support, group_patches[g], &code, newton);
    code.coeffs = std::move(fit.code.coeffs);
  });
}

}  // namespace

RowObjective dictionary_row_objective(const LearningState& state,
                                      const std::vector<Matrix>& group_patches, std::size_t row,
                                      const std::vector<std::size_t>& atoms) {
  RowContext ctx = make_row_context(state, group_patches);
  const Vector d_row = state.dictionary.atoms.row(static_cast<Eigen::Index>(row)).transpose();
  const std::vector<Vector> z = row_arguments(ctx, d_row);
  RowObjective out;
  out.value = row_value(ctx, z, row);
  Vector grad;
  row_derivatives(ctx, z, row, grad, nullptr);
  out.gradient = Vector::Zero(static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const Eigen::Index s = ctx.slot.at(atoms[k]);
    if (s >= 0) out.gradient[static_cast<Eigen::Index>(k)] = grad[s];
  }
  return out;
}

LearningState dictionary_learning_round(LearningState state,
                                        const std::vector<Matrix>& group_patches, int iterations,
                                        const LearningOptions& options,
                                        std::vector<double>* objective_trace) {
  if (iterations < 1) throw InvalidArgument("a learning round needs at least one iteration");
  if (group_patches.size() != state.codes.size()) {
    throw DimensionError("one patch matrix per group code is required");
  }
  state.recount_usage();
  double before = learning_objective(state, group_patches);
  if (objective_trace != nullptr) objective_trace->push_back(before);
  for (int it = 0; it < iterations; ++it) {
    if (options.mode == LearningMode::advanced) coefficient_step(state, group_patches, options);
    dictionary_step(state, group_patches, options);
    const double after = learning_objective(state, group_patches);
    if (after > before + options.descent_tolerance * std::max(1.0, std::abs(before))) {
      throw InternalError("learning alternation increased the objective from " +
                          std::to_string(before) + " to " + std::to_string(after));
    }
    if (objective_trace != nullptr) objective_trace->push_back(after);
    before = after;
  }
  normalize_atoms(state);
  return state;
}

Dictionary init_dictionary_dct(std::size_t patch_side) {
  if (patch_side < 2) throw InvalidArgument("DCT dictionary needs a patch side of at least 2");
  const std::size_t s = patch_side;
  const auto d = static_cast<Eigen::Index>(s * s);
  // basis(k, x): 1-D orthonormal DCT-II vector of frequency k.
  Matrix basis(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
  for (std::size_t k = 0; k < s; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(s));
    for (std::size_t x = 0; x < s; ++x) {
      basis(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(x)) =
          scale * std::cos(std::numbers::pi * (2.0 * static_cast<double>(x) + 1.0) *
                           static_cast<double>(k) / (2.0 * static_cast<double>(s)));
    }
  }
  Dictionary dict;
  dict.atoms.resize(d, d);
  for (std::size_t v = 0; v < s; ++v) {      // horizontal frequency
    for (std::size_t u = 0; u < s; ++u) {    // vertical frequency
      const auto atom = static_cast<Eigen::Index>(v * s + u);
      for (std::size_t c = 0; c < s; ++c) {
        for (std::size_t r = 0; r < s; ++r) {
          const double value = basis(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(r)) *
                               basis(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(c));
          const double mapped = std::copysign(std::log1p(std::abs(value) / 0.01), value);
          dict.atoms(static_cast<Eigen::Index>(c * s + r), atom) = mapped;
        }
      }
      dict.atoms.col(atom).normalize();
    }
  }
  return dict;
}

double training_peak_for(double peak) {
  if (!(peak > 0.0)) throw InvalidArgument("peak must be positive");
  if (peak <= 0.2) return 0.2;
  if (peak <= 4.0) return 2.0;
  return 18.0;
}

void format_dictionary(const Dictionary& dictionary, std::ostream& out) {
  out << dictionary.atoms.rows() << ' ' << dictionary.atoms.cols() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < dictionary.atoms.rows(); ++r) {
    for (Eigen::Index c = 0; c < dictionary.atoms.cols(); ++c) {
      out << dictionary.atoms(r, c) << (c + 1 == dictionary.atoms.cols() ? '\n' : ' ');
    }
  }
}

Dictionary parse_dictionary(std::istream& in, const std::string& source_name) {
  auto fail = [&](const std::string& what, std::size_t line) -> void {
    throw IoError(source_name + ":" + std::to_string(line) + ": " + what);
  };
  std::string line;
  std::size_t line_no = 0;
  long long d = 0, n = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream hs(line);
    if (!(hs >> d >> n) || d <= 0 || n <= 0) fail("expected header 'd n'", line_no);
    break;
  }
  if (d <= 0) fail("missing header", line_no);
  Dictionary dict;
  dict.atoms.resize(d, n);
  Eigen::Index row = 0;
  while (row < d && std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    Eigen::Index col = 0;
    for (;;) {
      while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
      if (p == end) break;
      const char* tok_end = p;
      while (tok_end < end && !std::isspace(static_cast<unsigned char>(*tok_end))) ++tok_end;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, tok_end, v);
      if (ec != std::errc() || ptr != tok_end) {
        fail("invalid number '" + std::string(p, tok_end) + "'", line_no);
      }
      if (col == n) fail("more than " + std::to_string(n) + " values on a row", line_no);
      if (!std::isfinite(v)) fail("dictionary entries must be finite", line_no);
      dict.atoms(row, col++) = v;
      p = tok_end;
    }
    if (col != n) {
      fail("expected " + std::to_string(n) + " values, found " + std::to_string(col), line_no);
    }
    ++row;
  }
  if (row != d) fail("expected " + std::to_string(d) + " rows, found " + std::to_string(row), line_no);
  return dict;
}

void write_dictionary(const Dictionary& dictionary, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  format_dictionary(dictionary, out);
  if (!out) throw IoError(path.string() + ": write failed");
}

Dictionary read_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  return parse_dictionary(in, path.string());
}

}  // namespace spda
