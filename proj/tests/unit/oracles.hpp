// Shared helpers for the unit tests: random states and brute-force
// reference computations that do not reuse library code paths.
#pragma once

#include "qppg/quantum.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

namespace oracle {

using qppg::Complex;
using qppg::ComplexMatrix2;

inline double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

/// Random density matrix: Bloch vector uniform in the unit ball.
inline ComplexMatrix2 random_rho(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::Vector3d r(n(rng), n(rng), n(rng));
  r *= std::cbrt(u(rng)) / r.norm();
  ComplexMatrix2 rho;
  rho << Complex(0.5 * (1 + r.z()), 0), Complex(0.5 * r.x(), -0.5 * r.y()),
      Complex(0.5 * r.x(), 0.5 * r.y()), Complex(0.5 * (1 - r.z()), 0);
  return rho;
}

/// Random Haar-ish unitary via the exponential of a random Hermitian matrix.
inline ComplexMatrix2 random_unitary(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexMatrix2 a;
  a << Complex(n(rng), n(rng)), Complex(n(rng), n(rng)), Complex(n(rng), n(rng)),
      Complex(n(rng), n(rng));
  const ComplexMatrix2 herm = 0.5 * (a + a.adjoint());
  return (Complex(0, 1) * herm).exp();
}

/// exp(-i theta sigma / 2) through the matrix exponential.
inline ComplexMatrix2 rotation_by_exponential(const ComplexMatrix2& sigma, double theta) {
  return (Complex(0, -0.5 * theta) * sigma).exp();
}

inline double purity(const ComplexMatrix2& rho) {
  double s = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) s += std::norm(rho(i, j));
  return s;
}

/// Standard normal upper tail Q(x).
inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace oracle
