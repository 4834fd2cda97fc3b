// SPDX-License-Identifier: Apache-2.0
#include "cogmimo/waveform_mf.hpp"

#include <cmath>

#include "cogmimo/errors.hpp"

namespace cogmimo {

WaveformSet generate_waveforms(int count, int length, double power) {
  if (count < 1) throw DomainError("need at least one waveform");
  if (length < count)
    throw DomainError("cannot build " + std::to_string(count) +
                      " orthogonal codes of length " + std::to_string(length));
  if (!(power > 0.0)) throw DomainError("waveform power must be positive");
  // Rows of the L-point DFT matrix: unit-modulus and exactly orthogonal.
  WaveformSet w;
  w.power = power;
  w.codes.resize(count, length);
  const double amp = std::sqrt(power);
  for (int k = 0; k < count; ++k)
    for (int n = 0; n < length; ++n) {
      const long phase_index = (static_cast<long>(k) * n) % length;
      w.codes(k, n) = std::polar(amp, 2.0 * kPi * static_cast<double>(phase_index) / length);
    }
  return w;
}

ReflectionDraw draw_reflections(const Scenario& scenario, PulseRng& rng) {
  ReflectionDraw d;
  d.eta.reserve(scenario.sources.size());
  for (const auto& src : scenario.sources) {
    if (src.kind == SourceKind::coexisting)
      d.eta.emplace_back(0.0, 0.0);
    else
      d.eta.push_back(rng.complex_normal(scenario.source_variance(src)));
  }
  return d;
}

namespace {

void check_indices(const IndexList& idx, int m, const char* what) {
  if (idx.empty()) throw DomainError(std::string("empty ") + what + " antenna set");
  for (int k : idx)
    if (k < 0 || k >= m) throw DomainError(std::string(what) + " antenna index out of range");
}

}  // namespace

PulseSnapshot simulate_pulse(const ArrayGeometry& geom, const Scenario& scenario,
                             const WaveformSet& waveforms, const IndexList& active_tx,
                             const IndexList& active_rx, const ReflectionDraw& draw,
                             cdouble tx_rotation, PulseRng& rng, long pulse_index) {
  scenario.validate_physics();
  const int m = geom.size();
  check_indices(active_tx, m, "transmit");
  check_indices(active_rx, m, "receive");
  if (static_cast<int>(active_tx.size()) > waveforms.count())
    throw DomainError("more active transmitters than orthogonal codes");
  if (draw.eta.size() != scenario.sources.size())
    throw DomainError("reflection draw does not match scenario");

  const int len = waveforms.length();
  const int nrx = static_cast<int>(active_rx.size());
  const int ntx = static_cast<int>(active_tx.size());

  PulseSnapshot snap;
  snap.tx = active_tx;
  snap.rx = active_rx;
  snap.pulse_index = pulse_index;
  snap.samples = CMatrix::Zero(nrx, len);

  const auto codes = waveforms.codes.topRows(ntx);
  for (std::size_t s = 0; s < scenario.sources.size(); ++s) {
    const auto& src = scenario.sources[s];
    const CVector a = steering_vector(geom, src.angle_deg);
    const CVector ar = a(active_rx);
    if (src.kind == SourceKind::coexisting) {
      const double var = scenario.source_variance(src) * len;
      Eigen::RowVectorXcd emission(len);
      for (int n = 0; n < len; ++n) emission[n] = rng.complex_normal(var);
      snap.samples.noalias() += ar * emission;
    } else {
      if (draw.eta[s] == cdouble{}) continue;
      const CVector at = a(active_tx);
      // Transmitted mixture seen from this direction: sum_k a_t[k] rho s_k(n).
      const Eigen::RowVectorXcd mixture = (tx_rotation * at.transpose()) * codes;
      snap.samples.noalias() += (draw.eta[s] * ar) * mixture;
    }
  }
  const double noise_var = scenario.noise_power * len;
  if (noise_var > 0.0)
    for (int n = 0; n < len; ++n)
      for (int p = 0; p < nrx; ++p) snap.samples(p, n) += rng.complex_normal(noise_var);
  return snap;
}

PulseSnapshot simulate_pulse(const ArrayGeometry& geom, const Scenario& scenario,
                             const WaveformSet& waveforms, const IndexList& active_tx,
                             const IndexList& active_rx, long pulse_index,
                             cdouble tx_rotation) {
  PulseRng rng(scenario.rng_seed, static_cast<std::uint64_t>(pulse_index));
  const ReflectionDraw draw = draw_reflections(scenario, rng);
  return simulate_pulse(geom, scenario, waveforms, active_tx, active_rx, draw, tx_rotation, rng,
                        pulse_index);
}

CMatrix matched_filter(const PulseSnapshot& snapshot, const WaveformSet& waveforms) {
  if (snapshot.samples.cols() != waveforms.length())
    throw DomainError("snapshot length does not match waveform length");
  const auto ntx = static_cast<Eigen::Index>(snapshot.tx.size());
  if (ntx > waveforms.count()) throw DomainError("snapshot uses more codes than available");
  return snapshot.samples * waveforms.codes.topRows(ntx).adjoint() /
         static_cast<double>(waveforms.length());
}

CVector vectorize(const CMatrix& y) {
  CVector out(y.size());
  const auto cols = y.cols();
  for (Eigen::Index p = 0; p < y.rows(); ++p)
    for (Eigen::Index q = 0; q < cols; ++q) out[p * cols + q] = y(p, q);
  return out;
}

CMatrix devectorize(const CVector& y, int rows, int cols) {
  if (y.size() != static_cast<Eigen::Index>(rows) * cols)
    throw DomainError("vector length does not match requested shape");
  CMatrix out(rows, cols);
  for (int p = 0; p < rows; ++p)
    for (int q = 0; q < cols; ++q) out(p, q) = y[p * cols + q];
  return out;
}

}  // namespace cogmimo
