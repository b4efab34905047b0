// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace iosim {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// A matrix that must be invertible is numerically singular.
struct singularity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An operation was invoked in the wrong lifecycle state.
struct state_error : std::logic_error {
  using std::logic_error::logic_error;
};

/// Derives an independent, reproducible RNG stream from a master seed.
inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
  std::seed_seq seq{master, stream};
  return Rng(seq);
}

inline double normal_sample(Rng& rng, double mean = 0.0, double stddev = 1.0) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(rng);
}

/// Circularly symmetric complex normal CN(0,1): Re and Im are i.i.d. N(0, 1/2).
inline Complex complex_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(0.5));
  const double re = dist(rng);
  const double im = dist(rng);
  return Complex(re, im);
}

inline CMatrix complex_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMatrix w(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = complex_normal(rng);
  return w;
}

}  // namespace iosim
