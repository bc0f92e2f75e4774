#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "spda/image.hpp"
#include "spda/model.hpp"

namespace spda::testing {

// Small deterministic generator wrapper used by the property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  std::uint64_t poisson(double mean) { return std::poisson_distribution<std::uint64_t>(mean)(rng_); }

  Matrix normal_matrix(std::size_t rows, std::size_t cols, double sd = 1.0) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(sd);
    return m;
  }

  // Unit-norm columns.
  Dictionary dictionary(std::size_t d, std::size_t n) {
    Dictionary D{normal_matrix(d, n)};
    D.atoms.colwise().normalize();
    return D;
  }

  // Count patches drawn around a positive mean profile.
  Matrix count_patches(std::size_t d, std::size_t m, double mean) {
    Matrix q(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
    for (Eigen::Index j = 0; j < q.cols(); ++j)
      for (Eigen::Index i = 0; i < q.rows(); ++i)
        q(i, j) = static_cast<double>(poisson(mean * uniform(0.3, 1.7)));
    return q;
  }

  // Strictly positive real patches.
  Matrix positive_patches(std::size_t d, std::size_t m, double lo, double hi) {
    Matrix q(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
    for (Eigen::Index j = 0; j < q.cols(); ++j)
      for (Eigen::Index i = 0; i < q.rows(); ++i) q(i, j) = uniform(lo, hi);
    return q;
  }

  Support distinct_indices(std::size_t n, std::size_t count) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng_);
    all.resize(count);
    return all;
  }

  Image image(std::size_t rows, std::size_t cols, double lo, double hi) {
    Image img(rows, cols, 0.0);
    for (double& v : img.pixels()) v = uniform(lo, hi);
    return img;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double relative_error(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max({1.0, a.norm(), b.norm()});
}

// Central-difference gradient of the single-patch objective.
inline Vector fd_gradient(const Matrix& dict_t, const Vector& a, const Vector& q, double h = 1e-6) {
  Vector g(a.size());
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    Vector up = a, down = a;
    up(k) += h;
    down(k) -= h;
    g(k) = (objective(dict_t, up, q) - objective(dict_t, down, q)) / (2.0 * h);
  }
  return g;
}

// Central-difference Jacobian of the analytic gradient.
inline Matrix fd_hessian(const Matrix& dict_t, const Vector& a, const Vector& q, double h = 1e-6) {
  Matrix H(a.size(), a.size());
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    Vector up = a, down = a;
    up(k) += h;
    down(k) -= h;
    H.col(k) = (gradient(dict_t, up, q) - gradient(dict_t, down, q)) / (2.0 * h);
  }
  return H;
}

}  // namespace spda::testing
