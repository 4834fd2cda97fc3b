// SPDX-License-Identifier: Apache-2.0
#include "cogmimo/core_model.hpp"

#include <cmath>

#include "cogmimo/errors.hpp"

namespace cogmimo {

ArrayGeometry::ArrayGeometry(int num_antennas, double spacing_wavelengths)
    : num_antennas_(num_antennas), spacing_wavelengths_(spacing_wavelengths) {
  if (num_antennas < 2) throw DomainError("array needs at least 2 antennas");
  if (!(spacing_wavelengths > 0.0)) throw DomainError("antenna spacing must be positive");
}

std::string to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::target: return "target";
    case SourceKind::deceptive: return "deceptive";
    case SourceKind::coexisting: return "coexisting";
  }
  return "unknown";
}

SourceKind parse_source_kind(const std::string& name) {
  if (name == "target") return SourceKind::target;
  if (name == "deceptive") return SourceKind::deceptive;
  if (name == "coexisting") return SourceKind::coexisting;
  throw ConfigError("unknown source kind '" + name + "'");
}

void check_angle(double angle_deg) {
  if (!(angle_deg > 0.0 && angle_deg < 180.0))
    throw DomainError("angle must lie in the open interval (0, 180) degrees, got " +
                      std::to_string(angle_deg));
}

void Scenario::validate_physics() const {
  if (!(noise_power >= 0.0)) throw DomainError("noise power must be nonnegative");
  if (!(signal_power > 0.0)) throw DomainError("signal power must be positive");
  int targets = 0;
  for (const auto& s : sources) {
    check_angle(s.angle_deg);
    if (std::isnan(s.power_db)) throw DomainError("source power is NaN");
    if (s.kind == SourceKind::target) ++targets;
  }
  if (targets > 1) throw DomainError("scenario has more than one target");
}

void Scenario::validate() const {
  validate_physics();
  if (!(noise_power > 0.0)) throw DomainError("noise power must be positive");
  if (!target_index()) throw DomainError("scenario has no target");
}

std::optional<std::size_t> Scenario::target_index() const {
  for (std::size_t i = 0; i < sources.size(); ++i)
    if (sources[i].kind == SourceKind::target) return i;
  return std::nullopt;
}

const SourceDescriptor& Scenario::target() const {
  auto idx = target_index();
  if (!idx) throw DomainError("scenario has no target");
  return sources[*idx];
}

double Scenario::source_variance(const SourceDescriptor& src) const {
  // A noiseless scene refers its powers to unit noise.
  const double reference = noise_power > 0.0 ? noise_power : 1.0;
  const double ratio = reference * from_db(src.power_db);
  if (src.kind == SourceKind::coexisting) return ratio;
  return ratio / signal_power;
}

Scenario Scenario::without_target() const {
  Scenario out = *this;
  out.sources.clear();
  for (const auto& s : sources)
    if (s.kind != SourceKind::target) out.sources.push_back(s);
  return out;
}

Subarray Subarray::full(int num_antennas) {
  Subarray s;
  for (int k = 0; k < num_antennas; ++k) {
    s.tx.push_back(k);
    s.rx.push_back(k);
  }
  return s;
}

IndexList Subarray::virtual_indices(int num_antennas) const {
  IndexList idx;
  idx.reserve(tx.size() * rx.size());
  for (int p : rx)
    for (int q : tx) idx.push_back(p * num_antennas + q);
  return idx;
}

CVector steering_vector(const ArrayGeometry& geom, double angle_deg) {
  check_angle(angle_deg);
  const double step = 2.0 * kPi * geom.spacing() * std::cos(deg2rad(angle_deg));
  CVector a(geom.size());
  for (int k = 0; k < geom.size(); ++k) a[k] = std::polar(1.0, step * k);
  return a;
}

CVector virtual_steering(const ArrayGeometry& geom, double angle_deg) {
  const CVector a = steering_vector(geom, angle_deg);
  const int m = geom.size();
  CVector b(m * m);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) b[p * m + q] = a[p] * a[q];
  return b;
}

namespace {

void add_source_terms(const ArrayGeometry& geom, const Scenario& scenario, bool include_target,
                      CMatrix& r) {
  const int m = geom.size();
  const double s2 = scenario.signal_power;
  for (const auto& src : scenario.sources) {
    if (src.kind == SourceKind::target && !include_target) continue;
    const double var = scenario.source_variance(src);
    if (var == 0.0) continue;
    if (src.kind == SourceKind::coexisting) {
      // a_r a_r^H (x) (sigma_j^2 sigma_s^2 I): block (p, p') is a scaled identity.
      const CVector a = steering_vector(geom, src.angle_deg);
      const double scale = var * s2;
      for (int p = 0; p < m; ++p)
        for (int pp = 0; pp < m; ++pp) {
          const cdouble v = scale * a[p] * std::conj(a[pp]);
          for (int q = 0; q < m; ++q) r(p * m + q, pp * m + q) += v;
        }
    } else {
      const CVector b = virtual_steering(geom, src.angle_deg);
      r.noalias() += (var * s2 * s2) * (b * b.adjoint());
    }
  }
  r.diagonal().array() += scenario.noise_power * s2;
}

}  // namespace

CMatrix oracle_covariance(const ArrayGeometry& geom, const Scenario& scenario) {
  scenario.validate_physics();
  const int n = geom.virtual_size();
  CMatrix r = CMatrix::Zero(n, n);
  add_source_terms(geom, scenario, true, r);
  return r;
}

CMatrix interference_noise_covariance(const ArrayGeometry& geom, const Scenario& scenario) {
  scenario.validate_physics();
  const int n = geom.virtual_size();
  CMatrix r = CMatrix::Zero(n, n);
  add_source_terms(geom, scenario, false, r);
  return r;
}

CMatrix restrict(const CMatrix& m, const IndexList& idx) { return m(idx, idx); }

CVector restrict(const CVector& v, const IndexList& idx) { return v(idx); }

}  // namespace cogmimo
