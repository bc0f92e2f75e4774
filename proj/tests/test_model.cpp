#include <doctest.h>

#include <cmath>

#include <Eigen/Cholesky>

#include "spda/errors.hpp"
#include "spda/model.hpp"
#include "support.hpp"

using namespace spda;
using spda::testing::Gen;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

TEST_CASE("objective closed forms") {
  Gen gen(1);
  const Matrix D = gen.normal_matrix(9, 3);
  const Matrix q = gen.count_patches(9, 1, 4.0);
  CHECK(objective(D, Matrix::Zero(3, 1), q) == doctest::Approx(9.0));

  CHECK(objective(scalar(1.0), scalar(std::log(3.0)), scalar(3.0)) ==
        doctest::Approx(3.0 - 3.0 * std::log(3.0)).epsilon(1e-14));
  CHECK(3.0 - 3.0 * std::log(3.0) == doctest::Approx(-0.29584).epsilon(1e-4));

  const Matrix a = gen.normal_matrix(3, 2, 0.3);
  const Matrix qq = gen.count_patches(9, 2, 3.0);
  const double joint = objective(D, a, qq);
  const double split = objective(D, a.col(0), qq.col(0)) + objective(D, a.col(1), qq.col(1));
  CHECK(joint == doctest::Approx(split).epsilon(1e-14));
}

TEST_CASE("objective flags clamped exponents") {
  bool clamped = false;
  const double v = objective(scalar(1.0), scalar(80.0), scalar(0.0), &clamped);
  CHECK(clamped);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(std::exp(kExponentClamp)));
  clamped = true;
  objective(scalar(1.0), scalar(1.0), scalar(0.0), &clamped);
  CHECK_FALSE(clamped);
}

TEST_CASE("objective reports the failing patch") {
  Matrix q(1, 3);
  q << 1.0, 2.0, std::numeric_limits<double>::infinity();
  try {
    objective(scalar(1.0), Matrix::Constant(1, 3, 1.0), q);
    FAIL("expected NumericalOverflow");
  } catch (const NumericalOverflow& e) {
    CHECK(e.patch_index() == 2);
  }
}

TEST_CASE("gradient and hessian closed forms") {
  const Vector g = gradient(scalar(1.0), Vector::Zero(1), Vector::Constant(1, 3.0));
  CHECK(g(0) == -2.0);
  const Matrix H = hessian(scalar(1.0), Vector::Zero(1), Vector::Constant(1, 3.0));
  CHECK(H(0, 0) == 1.0 + 1e-6);
  const Vector at_min = gradient(scalar(1.0), Vector::Constant(1, std::log(3.0)), Vector::Constant(1, 3.0));
  CHECK(std::abs(at_min(0)) < 1e-14);
}

TEST_CASE("gradient and hessian agree with finite differences") {
  Gen gen(2);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 16, t = gen.index(1, 4);
    const Matrix D = gen.dictionary(d, t).atoms;
    const Vector a = gen.normal_matrix(t, 1, 0.5);
    const Vector q = gen.count_patches(d, 1, 3.0);
    CHECK(testing::relative_error(gradient(D, a, q), testing::fd_gradient(D, a, q)) <= 1e-6);
    const Matrix H = hessian(D, a, q, 0.0);
    CHECK(testing::relative_error(H, testing::fd_hessian(D, a, q)) <= 1e-5);
    CHECK((H - H.transpose()).norm() == 0.0);
    CHECK(hessian(D, a, q).llt().info() == Eigen::Success);
  }
}

TEST_CASE("solve_fixed_support reaches stationarity") {
  const Dictionary D{scalar(1.0)};
  NewtonOptions opts;
  opts.max_iterations = 25;
  const SupportFit fit = solve_fixed_support(D, {0}, scalar(3.0), nullptr, opts);
  CHECK(fit.code.coeffs(0, 0) == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  CHECK(group_estimates(D, fit.code)(0, 0) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(fit.unconverged == 0);

  Matrix two(1, 2);
  two << 3.0, 5.0;
  const SupportFit pair = solve_fixed_support(D, {0}, two, nullptr, opts);
  CHECK(pair.code.coeffs(0, 0) == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  CHECK(pair.code.coeffs(0, 1) == doctest::Approx(std::log(5.0)).epsilon(1e-9));
}

TEST_CASE("solve_fixed_support on an all-zero patch drifts without overflow") {
  const Dictionary D{scalar(1.0)};
  NewtonOptions opts;
  opts.max_iterations = 25;
  const SupportFit fit = solve_fixed_support(D, {0}, scalar(0.0), nullptr, opts);
  CHECK(fit.code.coeffs(0, 0) < -5.0);
  CHECK(fit.objective >= 0.0);
  CHECK(std::isfinite(fit.objective));
  CHECK(group_estimates(D, fit.code)(0, 0) < 1e-2);
}

TEST_CASE("newton_solve_patch never increases the objective") {
  Gen gen(3);
  NewtonOptions opts;
  opts.max_iterations = 25;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t t = gen.index(1, 4);
    const Matrix D = gen.dictionary(16, t).atoms;
    const Vector q = gen.count_patches(16, 1, gen.uniform(0.1, 20.0));
    Vector a = gen.normal_matrix(t, 1, 1.0);
    std::vector<double> trace;
    newton_solve_patch(D, q, a, opts, 0, &trace);
    for (std::size_t k = 1; k < trace.size(); ++k) CHECK(trace[k] <= trace[k - 1]);
  }
}

TEST_CASE("solve_fixed_support warm start is matched by atom index") {
  Gen gen(4);
  const Dictionary D = gen.dictionary(9, 5);
  const Matrix q = gen.count_patches(9, 3, 5.0);
  NewtonOptions opts;
  opts.max_iterations = 25;
  const SupportFit first = solve_fixed_support(D, {3, 1}, q, nullptr, opts);
  // With no Newton steps the result is the warm start itself, reordered to the new support.
  NewtonOptions none = opts;
  none.max_iterations = 0;
  const SupportFit warm = solve_fixed_support(D, {1, 3}, q, &first.code, none);
  CHECK(warm.objective == doctest::Approx(first.objective).epsilon(1e-12));
  CHECK(warm.code.coeffs(0, 0) == first.code.coeffs(1, 0));
  const SupportFit grown = solve_fixed_support(D, {1, 3, 4}, q, &first.code, none);
  CHECK(grown.code.coeffs(2, 0) == 0.0);
  CHECK(grown.objective == doctest::Approx(first.objective).epsilon(1e-12));
}

TEST_CASE("empty support") {
  const Dictionary D{Matrix::Identity(4, 4)};
  GroupCode code;
  code.coeffs = Matrix(0, 3);
  CHECK(group_objective(D, code, Matrix::Constant(4, 3, 2.0)) == 12.0);
  CHECK((group_estimates(D, code).array() == 1.0).all());
}
