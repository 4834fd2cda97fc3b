// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "cogmimo/types.hpp"

namespace cogmimo {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Convex quadratic cone program
///
///   minimize    1/2 x'Px + q'x
///   subject to  A x = b
///               G x + s = h,  s in K
///
/// where K is the nonnegative orthant of dimension `num_linear` followed by
/// second-order cones {(t, u) : ||u|| <= t} of the listed dimensions.
struct ConeProgram {
  RMatrix P;  // empty means zero
  RVector q;
  SparseRowMatrix A;
  RVector b;
  SparseRowMatrix G;
  RVector h;
  int num_linear = 0;
  std::vector<int> soc_dims;
};

struct ConeSolverOptions {
  int max_iterations = 100;
  double feastol = 1e-9;
  double abstol = 1e-9;
  double reltol = 1e-9;
  double step_fraction = 0.99;
  int refinement_steps = 2;
};

enum class ConeStatus { optimal, iteration_limit, numerical_failure };

std::string to_string(ConeStatus status);

struct ConeSolution {
  RVector x, y, z, s;
  ConeStatus status = ConeStatus::numerical_failure;
  int iterations = 0;
  double primal_residual = 0.0;  // max(||Ax-b||, ||Gx+s-h||), scaled
  double dual_residual = 0.0;    // ||Px+q+A'y+G'z||, scaled
  double gap = 0.0;              // s'z
  double relative_gap = 0.0;
  double primal_objective = 0.0;

  /// Largest of the scaled primal/dual residuals and the (relative) gap.
  double kkt_residual() const;
};

/// Deterministic primal-dual interior-point method with Nesterov-Todd scaling
/// and Mehrotra predictor-corrector steps. Dense normal equations; the problem
/// must make P + G'G positive definite on the null space of A.
/// A non-optimal status comes with the best iterate seen, so callers can still
/// accept it against a looser KKT tolerance.
ConeSolution solve_cone_program(const ConeProgram& prog, const ConeSolverOptions& opts = {});

/// Largest alpha with x + alpha d in the cone, starting from the interior
/// point x. Returns +inf when the ray never leaves the cone.
double max_cone_step(const RVector& x, const RVector& d, int num_linear,
                     const std::vector<int>& soc_dims);

}  // namespace cogmimo
