// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <vector>

#include "cogmimo/core_model.hpp"
#include "cogmimo/types.hpp"

namespace cogmimo {

/// Diagonal loading of eps * trace(R)/dim * I, applied only when cond(R)
/// exceeds `condition_limit`.
struct LoadingOptions {
  double condition_limit = 1e10;
  double load_factor = 1e-6;
};

/// Returns R unchanged or diagonally loaded per `opts`.
CMatrix load_if_ill_conditioned(const CMatrix& r, const LoadingOptions& opts = {});

struct BeamformerSolution {
  CVector weights;
  double look_angle_deg = std::numeric_limits<double>::quiet_NaN();
  double output_sinr_db = std::numeric_limits<double>::quiet_NaN();
};

/// Capon / MVDR weights w = R^-1 b / (b^H R^-1 b), via Cholesky.
BeamformerSolution capon_weights(const CMatrix& r, const CVector& b,
                                 double look_angle_deg = std::numeric_limits<double>::quiet_NaN(),
                                 const LoadingOptions& opts = {});

/// [[Re R, -Im R], [Im R, Re R]]
RMatrix realify(const CMatrix& r);
/// [Re v; Im v]
RVector realify(const CVector& v);
CVector complexify(const RVector& v);

struct RealLift {
  RMatrix r;
  RVector w;
  RVector b;
};

RealLift realify(const CMatrix& r, const CVector& w, const CVector& b);

/// Linear output SINR of weights `w` on `sub`, against the analytic
/// interference-plus-noise covariance. Zero target power gives 0.
double output_sinr(const CVector& w, const ArrayGeometry& geom, const Scenario& scenario,
                   const Subarray& sub);

/// Same in dB; zero target power reports -infinity.
double output_sinr_db(const CVector& w, const ArrayGeometry& geom, const Scenario& scenario,
                      const Subarray& sub);

/// Best achievable SINR on `sub` (Capon on the analytic covariance), dB.
double optimal_sinr_db(const ArrayGeometry& geom, const Scenario& scenario, const Subarray& sub);

/// 20 log10 |w^H b(theta)| on `sub` for each grid angle, normalized to 0 dB
/// at the solution's look angle.
std::vector<double> beampattern(const BeamformerSolution& sol, const ArrayGeometry& geom,
                                const Subarray& sub, const std::vector<double>& grid_deg);

}  // namespace cogmimo
