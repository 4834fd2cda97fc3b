// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <limits>

#include "cogmimo/cone_solver.hpp"

using namespace cogmimo;

namespace {

SparseRowMatrix sparse(const RMatrix& dense) { return dense.sparseView(); }

}  // namespace

TEST_CASE("linear program over the simplex") {
  // min x0 + 2 x1  s.t.  x0 + x1 = 1, x >= 0.
  ConeProgram prog;
  prog.q = (RVector(2) << 1.0, 2.0).finished();
  prog.A = sparse((RMatrix(1, 2) << 1.0, 1.0).finished());
  prog.b = RVector::Ones(1);
  prog.G = sparse(-RMatrix::Identity(2, 2));
  prog.h = RVector::Zero(2);
  prog.num_linear = 2;
  const auto sol = solve_cone_program(prog);
  REQUIRE(sol.status == ConeStatus::optimal);
  CHECK(sol.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(sol.x(1)) < 1e-6);
  CHECK(sol.primal_objective == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.kkt_residual() < 1e-6);
}

TEST_CASE("second-order cone distance to a line") {
  // min t  s.t.  ||x - (1, 1)|| <= t,  x0 + x1 = 0.  Optimum sqrt(2) at x = 0.
  ConeProgram prog;
  prog.q = (RVector(3) << 1.0, 0.0, 0.0).finished();
  prog.A = sparse((RMatrix(1, 3) << 0.0, 1.0, 1.0).finished());
  prog.b = RVector::Zero(1);
  prog.G = sparse(-RMatrix::Identity(3, 3));
  prog.h = (RVector(3) << 0.0, -1.0, -1.0).finished();
  prog.soc_dims = {3};
  const auto sol = solve_cone_program(prog);
  REQUIRE(sol.status == ConeStatus::optimal);
  CHECK(sol.x(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  CHECK(std::abs(sol.x(1)) < 1e-6);
  CHECK(std::abs(sol.x(2)) < 1e-6);
}

TEST_CASE("equality-constrained quadratic program") {
  // min 1/2 ||x||^2 + 0*t  s.t.  sum x = 1, ||x|| <= t <= 10.
  const int n = 5;
  ConeProgram prog;
  prog.P = RMatrix::Zero(n + 1, n + 1);
  prog.P.topLeftCorner(n, n).setIdentity();
  prog.q = RVector::Zero(n + 1);
  RMatrix a = RMatrix::Zero(1, n + 1);
  a.leftCols(n).setOnes();
  prog.A = sparse(a);
  prog.b = RVector::Ones(1);
  RMatrix g = RMatrix::Zero(n + 2, n + 1);
  g(0, n) = 1.0;  // t <= 10
  g(1, n) = -1.0;
  for (int i = 0; i < n; ++i) g(2 + i, i) = -1.0;
  prog.G = sparse(g);
  prog.h = RVector::Zero(n + 2);
  prog.h(0) = 10.0;
  prog.num_linear = 1;
  prog.soc_dims = {n + 1};
  const auto sol = solve_cone_program(prog);
  REQUIRE(sol.status == ConeStatus::optimal);
  for (int i = 0; i < n; ++i) CHECK(sol.x(i) == doctest::Approx(1.0 / n).epsilon(1e-6));
  CHECK(sol.x(n) >= std::sqrt(1.0 / n) - 1e-6);
}

TEST_CASE("solver is deterministic") {
  ConeProgram prog;
  prog.q = (RVector(3) << 1.0, 0.3, -0.2).finished();
  prog.A = sparse((RMatrix(1, 3) << 0.0, 1.0, 1.0).finished());
  prog.b = RVector::Ones(1);
  prog.G = sparse(-RMatrix::Identity(3, 3));
  prog.h = RVector::Zero(3);
  prog.soc_dims = {3};
  const auto a = solve_cone_program(prog);
  const auto b = solve_cone_program(prog);
  CHECK(a.x == b.x);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("maximum step to the cone boundary") {
  const RVector x = (RVector(2) << 1.0, 1.0).finished();
  CHECK(max_cone_step(x, (RVector(2) << -1.0, 0.0).finished(), 2, {}) == doctest::Approx(1.0));
  CHECK(max_cone_step(x, (RVector(2) << 1.0, 0.0).finished(), 2, {}) ==
        std::numeric_limits<double>::infinity());

  const RVector s = (RVector(3) << 2.0, 0.0, 0.0).finished();
  CHECK(max_cone_step(s, (RVector(3) << 0.0, 1.0, 0.0).finished(), 0, {3}) ==
        doctest::Approx(2.0));
  CHECK(max_cone_step(s, (RVector(3) << 1.0, 0.0, 0.0).finished(), 0, {3}) ==
        std::numeric_limits<double>::infinity());
  CHECK(max_cone_step(s, (RVector(3) << -1.0, 0.0, 0.0).finished(), 0, {3}) ==
        doctest::Approx(2.0));
}
