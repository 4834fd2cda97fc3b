// SPDX-License-Identifier: Apache-2.0
#include "cogmimo/beamformer.hpp"

#include <cmath>

#include "cogmimo/errors.hpp"

namespace cogmimo {

CMatrix load_if_ill_conditioned(const CMatrix& r, const LoadingOptions& opts) {
  if (r.rows() != r.cols() || r.rows() == 0) throw DomainError("covariance must be square");
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(r, Eigen::EigenvaluesOnly);
  const RVector& ev = eig.eigenvalues();
  const double hi = ev.maxCoeff();
  const double lo = ev.minCoeff();
  const bool ill = !(lo > 0.0) || hi / lo > opts.condition_limit;
  if (!ill) return r;
  const double load = opts.load_factor * r.trace().real() / static_cast<double>(r.rows());
  CMatrix loaded = r;
  loaded.diagonal().array() += load;
  return loaded;
}

BeamformerSolution capon_weights(const CMatrix& r, const CVector& b, double look_angle_deg,
                                 const LoadingOptions& opts) {
  if (r.rows() != b.size()) throw DomainError("covariance and steering sizes differ");
  const CMatrix rl = load_if_ill_conditioned(r, opts);
  Eigen::LLT<CMatrix> llt(rl);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance is singular after loading");
  const CVector rinv_b = llt.solve(b);
  const cdouble denom = b.dot(rinv_b);  // b^H R^-1 b
  if (!(std::abs(denom) > 0.0) || !std::isfinite(std::abs(denom)))
    throw NumericalError("degenerate Capon normalization");
  BeamformerSolution sol;
  sol.weights = rinv_b / denom.real();
  sol.look_angle_deg = look_angle_deg;
  return sol;
}

RMatrix realify(const CMatrix& r) {
  const auto n = r.rows();
  RMatrix out(2 * n, 2 * r.cols());
  out.topLeftCorner(n, r.cols()) = r.real();
  out.topRightCorner(n, r.cols()) = -r.imag();
  out.bottomLeftCorner(n, r.cols()) = r.imag();
  out.bottomRightCorner(n, r.cols()) = r.real();
  return out;
}

RVector realify(const CVector& v) {
  RVector out(2 * v.size());
  out << v.real(), v.imag();
  return out;
}

CVector complexify(const RVector& v) {
  if (v.size() % 2 != 0) throw DomainError("real lift must have even length");
  const auto n = v.size() / 2;
  CVector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = {v[i], v[i + n]};
  return out;
}

RealLift realify(const CMatrix& r, const CVector& w, const CVector& b) {
  return {realify(r), realify(w), realify(b)};
}

double output_sinr(const CVector& w, const ArrayGeometry& geom, const Scenario& scenario,
                   const Subarray& sub) {
  const IndexList idx = sub.virtual_indices(geom.size());
  if (w.size() != static_cast<Eigen::Index>(idx.size()))
    throw DomainError("weight length does not match the selected virtual subarray");
  const auto& tgt = scenario.target();
  const double s2 = scenario.signal_power;
  const CVector b = restrict(virtual_steering(geom, tgt.angle_deg), idx);
  const double signal = s2 * s2 * scenario.source_variance(tgt) * std::norm(w.dot(b));
  const CMatrix rin = restrict(interference_noise_covariance(geom, scenario), idx);
  const double denom = w.dot(rin * w).real();
  if (!(denom > 0.0)) throw DomainError("interference-plus-noise power is zero");
  return signal / denom;
}

double output_sinr_db(const CVector& w, const ArrayGeometry& geom, const Scenario& scenario,
                      const Subarray& sub) {
  const double s = output_sinr(w, geom, scenario, sub);
  if (s == 0.0) return -std::numeric_limits<double>::infinity();
  return to_db(s);
}

double optimal_sinr_db(const ArrayGeometry& geom, const Scenario& scenario, const Subarray& sub) {
  const IndexList idx = sub.virtual_indices(geom.size());
  const CMatrix rin = restrict(interference_noise_covariance(geom, scenario), idx);
  const CVector b = restrict(virtual_steering(geom, scenario.target().angle_deg), idx);
  const BeamformerSolution sol = capon_weights(rin, b);
  return output_sinr_db(sol.weights, geom, scenario, sub);
}

std::vector<double> beampattern(const BeamformerSolution& sol, const ArrayGeometry& geom,
                                const Subarray& sub, const std::vector<double>& grid_deg) {
  if (grid_deg.empty()) throw DomainError("empty angle grid");
  const IndexList idx = sub.virtual_indices(geom.size());
  if (sol.weights.size() != static_cast<Eigen::Index>(idx.size()))
    throw DomainError("weight length does not match the selected virtual subarray");
  const double ref = std::abs(sol.weights.dot(restrict(virtual_steering(geom, sol.look_angle_deg), idx)));
  std::vector<double> out;
  out.reserve(grid_deg.size());
  for (double a : grid_deg) {
    const double g = std::abs(sol.weights.dot(restrict(virtual_steering(geom, a), idx)));
    out.push_back(20.0 * std::log10(g / ref));
  }
  return out;
}

}  // namespace cogmimo
