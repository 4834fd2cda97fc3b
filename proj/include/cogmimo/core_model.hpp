// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cogmimo/types.hpp"

namespace cogmimo {

/// Candidate uniform linear array of M antennas with spacing d/lambda.
class ArrayGeometry {
 public:
  explicit ArrayGeometry(int num_antennas, double spacing_wavelengths = 0.5);

  int size() const noexcept { return num_antennas_; }
  int virtual_size() const noexcept { return num_antennas_ * num_antennas_; }
  double spacing() const noexcept { return spacing_wavelengths_; }

 private:
  int num_antennas_;
  double spacing_wavelengths_;
};

enum class SourceKind { target, deceptive, coexisting };

std::string to_string(SourceKind kind);
SourceKind parse_source_kind(const std::string& name);

/// One emitter or reflector seen by the array.
///
/// `power_db` is the per-virtual-element ratio to noise at the matched-filter
/// output (SNR for the target, INR for interferers).
struct SourceDescriptor {
  SourceKind kind = SourceKind::target;
  double angle_deg = 90.0;
  double power_db = 0.0;
};

/// The environment the radar perceives.
///
/// Physics routines accept any scenario whose angles are valid and whose
/// powers are nonnegative; `validate()` enforces the stricter invariants
/// required before a design is run (one target, positive noise).
struct Scenario {
  std::vector<SourceDescriptor> sources;
  double noise_power = 1.0;   // sigma_v^2, referred to the matched-filter output
  double signal_power = 1.0;  // sigma_s^2 per transmitted code
  std::uint64_t rng_seed = 1;

  void validate() const;
  void validate_physics() const;

  /// Index of the target source, if any.
  std::optional<std::size_t> target_index() const;
  const SourceDescriptor& target() const;

  /// Variance of the reflection coefficient (target, deceptive) or of the
  /// matched-filtered emission (coexisting) implied by `power_db`. With
  /// noise_power == 0 the ratio is taken against unit noise.
  double source_variance(const SourceDescriptor& src) const;

  /// Copy with the target removed and every interferer kept.
  Scenario without_target() const;
};

/// Transmit and receive antenna index sets on the candidate array.
struct Subarray {
  IndexList tx;
  IndexList rx;

  static Subarray full(int num_antennas);

  /// Virtual indices p*M + q for p in rx, q in tx, ordered rx-major.
  IndexList virtual_indices(int num_antennas) const;

  bool operator==(const Subarray&) const = default;
};

/// Physical steering vector: entry k = exp(j 2 pi k (d/lambda) cos theta).
CVector steering_vector(const ArrayGeometry& geom, double angle_deg);

/// Virtual steering b = a_r (x) a_t; entry p*M + q = a[p] a[q].
CVector virtual_steering(const ArrayGeometry& geom, double angle_deg);

/// Exact expectation of y y^H for the scenario on the full virtual array.
CMatrix oracle_covariance(const ArrayGeometry& geom, const Scenario& scenario);

/// Interference-plus-noise part of `oracle_covariance` (target excluded).
CMatrix interference_noise_covariance(const ArrayGeometry& geom, const Scenario& scenario);

/// Principal submatrix / subvector on the given indices.
CMatrix restrict(const CMatrix& m, const IndexList& idx);
CVector restrict(const CVector& v, const IndexList& idx);

void check_angle(double angle_deg);

}  // namespace cogmimo
