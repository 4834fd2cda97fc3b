// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "cogmimo/core_model.hpp"
#include "cogmimo/errors.hpp"
#include "test_util.hpp"

using namespace cogmimo;

namespace {

const cdouble kJ{0.0, 1.0};

// Kronecker product written independently of the library.
CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

Scenario scene(std::vector<SourceDescriptor> src, double noise = 1.0, double s2 = 1.0) {
  Scenario s;
  s.sources = std::move(src);
  s.noise_power = noise;
  s.signal_power = s2;
  return s;
}

}  // namespace

TEST_CASE("steering vector closed forms") {
  const ArrayGeometry g4(4), g3(3);
  CHECK((steering_vector(g4, 90.0) - CVector::Ones(4)).norm() < 1e-12);

  // Phase step pi/2 at 60 degrees.
  CVector expect(3);
  expect << 1.0, kJ, -1.0;
  CHECK((steering_vector(g3, 60.0) - expect).norm() < 1e-12);

  // Near endfire the phase step tends to pi.
  const CVector a = steering_vector(ArrayGeometry(2), 1e-6);
  CHECK(std::abs(a[1] - cdouble(-1.0, 0.0)) < 1e-9);
}

TEST_CASE("steering vector rejects angles outside the open interval") {
  const ArrayGeometry g(4);
  CHECK_THROWS_AS(steering_vector(g, 0.0), DomainError);
  CHECK_THROWS_AS(steering_vector(g, 180.0), DomainError);
  CHECK_THROWS_AS(steering_vector(g, -10.0), DomainError);
  CHECK_THROWS_AS(virtual_steering(g, 200.0), DomainError);
}

TEST_CASE("geometry invariants") {
  CHECK_THROWS_AS(ArrayGeometry(1), DomainError);
  CHECK_THROWS_AS(ArrayGeometry(4, 0.0), DomainError);
  CHECK_THROWS_AS(ArrayGeometry(4, -0.5), DomainError);
  CHECK(ArrayGeometry(5).virtual_size() == 25);
}

TEST_CASE("virtual steering is the receive-transmit Kronecker product") {
  const CVector b2 = virtual_steering(ArrayGeometry(2), 1e-6);
  CVector expect(4);
  expect << 1.0, -1.0, -1.0, 1.0;
  CHECK((b2 - expect).norm() < 1e-8);

  CHECK((virtual_steering(ArrayGeometry(4), 90.0) - CVector::Ones(16)).norm() < 1e-12);
  CHECK(std::abs(virtual_steering(ArrayGeometry(3), 60.0)[4] - cdouble(-1.0, 0.0)) < 1e-12);

  for (double deg : {7.0, 33.0, 90.0, 121.0, 170.0}) {
    for (double d : {0.5, 0.7, 1.0}) {
      const ArrayGeometry g(5, d);
      const CVector a = steering_vector(g, deg);
      const CVector b = virtual_steering(g, deg);
      CHECK((b - kron(a, a)).norm() < 1e-12);
      // Row-major vec of a_r a_t^T.
      const CMatrix outer = a * a.transpose();
      for (int p = 0; p < 5; ++p)
        for (int q = 0; q < 5; ++q) CHECK(std::abs(b[p * 5 + q] - outer(p, q)) < 1e-12);
      CHECK(std::abs(a.squaredNorm() - 5.0) < 1e-12);
      CHECK(std::abs(b.squaredNorm() - 25.0) < 1e-10);
      CHECK(std::abs(a[0] - cdouble(1.0, 0.0)) == 0.0);
      for (int k = 0; k < b.size(); ++k) CHECK(std::abs(std::abs(b[k]) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("oracle covariance of a noise-only scene is a scaled identity") {
  const ArrayGeometry g(4);
  const CMatrix r = oracle_covariance(g, scene({}, 2.0, 3.0));
  CHECK((r - 6.0 * CMatrix::Identity(16, 16)).norm() < 1e-12);
}

TEST_CASE("oracle covariance of a noiseless single target is rank one") {
  const ArrayGeometry g(4);
  Scenario s = scene({{SourceKind::target, 65.0, 20.0}}, 1.0, 2.0);
  // Variance is defined relative to the noise floor, so remove the floor by hand.
  const double var = s.source_variance(s.sources[0]);
  const CVector b = virtual_steering(g, 65.0);
  const CMatrix expect = 4.0 * var * (b * b.adjoint()) + 2.0 * CMatrix::Identity(16, 16);
  CHECK(test::rel_err(oracle_covariance(g, s), expect) < 1e-12);

  Eigen::SelfAdjointEigenSolver<CMatrix> es(oracle_covariance(g, s) - 2.0 * CMatrix::Identity(16, 16));
  const auto ev = es.eigenvalues();
  CHECK(ev(15) > 1.0);
  CHECK(std::abs(ev(14)) < 1e-9 * ev(15));
}

TEST_CASE("per-element power equals the configured ratio to noise") {
  const ArrayGeometry g(3);
  for (double s2 : {0.5, 1.0, 4.0}) {
    Scenario s = scene({{SourceKind::target, 40.0, 20.0}}, 0.3, s2);
    const CMatrix r = oracle_covariance(g, s);
    const double noise = 0.3 * s2;
    CHECK(std::abs((r(0, 0).real() - noise) / noise - 100.0) < 1e-9);
  }
}

TEST_CASE("coexisting interference has receive-only Kronecker structure") {
  const ArrayGeometry g(3);
  Scenario s = scene({{SourceKind::coexisting, 50.0, 10.0}}, 1.0, 2.0);
  const CVector a = steering_vector(g, 50.0);
  const double sj2 = s.source_variance(s.sources[0]);
  CMatrix expect(9, 9);
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q)
      for (int pp = 0; pp < 3; ++pp)
        for (int qq = 0; qq < 3; ++qq)
          expect(p * 3 + q, pp * 3 + qq) =
              (q == qq ? sj2 * 2.0 : 0.0) * a[p] * std::conj(a[pp]) +
              (p == pp && q == qq ? 2.0 : 0.0);
  CHECK(test::rel_err(oracle_covariance(g, s), expect) < 1e-12);
}

TEST_CASE("oracle covariance is Hermitian PSD and noise shifts every eigenvalue") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> ang(5.0, 175.0), pw(-5.0, 25.0);
  const ArrayGeometry g(4);
  for (int trial = 0; trial < 20; ++trial) {
    Scenario s = scene({{SourceKind::target, ang(gen), pw(gen)},
                        {SourceKind::deceptive, ang(gen), pw(gen)},
                        {SourceKind::coexisting, ang(gen), pw(gen)}},
                       1.0, 1.5);
    const CMatrix full = oracle_covariance(g, s);
    CHECK((full - full.adjoint()).norm() < 1e-12 * full.norm());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(full);
    CHECK(es.eigenvalues().minCoeff() > -1e-10 * es.eigenvalues().maxCoeff());

    // Raising the noise floor while keeping source variances fixed adds
    // delta * sigma_s^2 to every eigenvalue.
    Scenario raised = s;
    raised.noise_power = 1.0 + 0.25;
    for (auto& src : raised.sources) src.power_db += to_db(1.0 / 1.25);
    Eigen::SelfAdjointEigenSolver<CMatrix> es2(oracle_covariance(g, raised));
    const RVector shift = es2.eigenvalues() - es.eigenvalues();
    CHECK((shift.array() - 0.25 * 1.5).abs().maxCoeff() < 1e-9 * full.norm());
  }
}

TEST_CASE("scenario validation") {
  Scenario ok = scene({{SourceKind::target, 65.0, 20.0}});
  CHECK_NOTHROW(ok.validate());
  CHECK_THROWS_AS(scene({{SourceKind::deceptive, 65.0, 20.0}}).validate(), DomainError);
  CHECK_THROWS_AS(scene({{SourceKind::target, 65.0, 20.0}, {SourceKind::target, 40.0, 20.0}})
                      .validate(),
                  DomainError);
  CHECK_THROWS_AS(scene({{SourceKind::target, 65.0, 20.0}}, 0.0).validate(), DomainError);
  CHECK_THROWS_AS(scene({{SourceKind::target, 180.0, 20.0}}).validate(), DomainError);
  CHECK_THROWS_AS(scene({{SourceKind::target, 65.0, 20.0}}, 1.0, 0.0).validate(), DomainError);
  // Physics routines accept a noiseless scene.
  CHECK_NOTHROW(scene({{SourceKind::target, 65.0, 20.0}}, 0.0).validate_physics());
  CHECK(parse_source_kind("coexisting") == SourceKind::coexisting);
  CHECK_THROWS_AS(parse_source_kind("jammer"), ConfigError);
}

TEST_CASE("virtual indices are receive-major") {
  Subarray sub{{0, 2}, {1, 3}};
  CHECK(sub.virtual_indices(4) == IndexList{4, 6, 12, 14});
  const Subarray full = Subarray::full(3);
  CHECK(full.virtual_indices(3).size() == 9);
}
