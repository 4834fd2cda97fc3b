// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "cogmimo/types.hpp"

namespace cogmimo::test {

inline CVector random_cvector(std::mt19937_64& gen, int n) {
  std::normal_distribution<double> nd;
  CVector v(n);
  for (int i = 0; i < n; ++i) v(i) = {nd(gen), nd(gen)};
  return v;
}

inline CMatrix random_cmatrix(std::mt19937_64& gen, int rows, int cols) {
  std::normal_distribution<double> nd;
  CMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = {nd(gen), nd(gen)};
  return m;
}

/// Hermitian positive definite: A A^H + shift I.
inline CMatrix random_hpd(std::mt19937_64& gen, int n, double shift = 0.1) {
  const CMatrix a = random_cmatrix(gen, n, n);
  return a * a.adjoint() + shift * CMatrix::Identity(n, n);
}

inline double rel_err(const CMatrix& a, const CMatrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace cogmimo::test
