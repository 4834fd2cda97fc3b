// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cogmimo/core_model.hpp"
#include "cogmimo/rng.hpp"
#include "cogmimo/types.hpp"

namespace cogmimo {

/// M orthogonal unit-modulus phase codes of length L, each of power sigma_s^2.
/// (1/L) codes codes^H = sigma_s^2 I.
struct WaveformSet {
  CMatrix codes;
  double power = 1.0;

  int count() const { return static_cast<int>(codes.rows()); }
  int length() const { return static_cast<int>(codes.cols()); }
};

WaveformSet generate_waveforms(int count, int length, double power);

/// Reflection coefficients of one pulse, indexed like Scenario::sources.
/// Coexisting emitters carry no coefficient (their entry is zero).
struct ReflectionDraw {
  std::vector<cdouble> eta;
};

ReflectionDraw draw_reflections(const Scenario& scenario, PulseRng& rng);

/// Received samples (active rx antennas x L) for one collection.
struct PulseSnapshot {
  CMatrix samples;
  IndexList tx;
  IndexList rx;
  long pulse_index = 0;
};

/// Synthesizes one collection. Active transmitter k sends code k multiplied
/// by `tx_rotation`. Time-domain noise and coexisting emissions have per-sample
/// variance L * sigma^2 so that their matched-filter outputs have variance
/// sigma^2 * sigma_s^2.
PulseSnapshot simulate_pulse(const ArrayGeometry& geom, const Scenario& scenario,
                             const WaveformSet& waveforms, const IndexList& active_tx,
                             const IndexList& active_rx, const ReflectionDraw& draw,
                             cdouble tx_rotation, PulseRng& rng, long pulse_index = 0);

/// Convenience form: draws coefficients and noise from pulse substream m.
PulseSnapshot simulate_pulse(const ArrayGeometry& geom, const Scenario& scenario,
                             const WaveformSet& waveforms, const IndexList& active_tx,
                             const IndexList& active_rx, long pulse_index,
                             cdouble tx_rotation = {1.0, 0.0});

/// Y = (1/L) samples codes_active^H, with one column per active transmitter.
CMatrix matched_filter(const PulseSnapshot& snapshot, const WaveformSet& waveforms);

/// Row-major stacking: y[p * cols + q] = Y(p, q), so a_r a_t^T maps to a_r (x) a_t.
CVector vectorize(const CMatrix& y);
CMatrix devectorize(const CVector& y, int rows, int cols);

}  // namespace cogmimo
