// SPDX-License-Identifier: Apache-2.0
#include "cogmimo/covariance_builder.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "cogmimo/errors.hpp"

namespace cogmimo {

std::string to_string(const BlockId& id) {
  return "Y" + std::to_string(id.row + 1) + std::to_string(id.col + 1);
}

IndexList MultiplexSchedule::block_indices(int block) const {
  IndexList idx(block_size);
  for (int k = 0; k < block_size; ++k) idx[k] = block * block_size + k;
  return idx;
}

namespace {

std::vector<BlockId> canonical_order(int k) {
  std::vector<BlockId> order;
  for (int i = 1; i < k; ++i) order.push_back({0, i});
  for (int j = 1; j < k - 1; ++j) order.push_back({j, k - 1});
  order.push_back({0, 0});
  order.push_back({k - 1, k - 1});
  return order;
}

void check_partition(int num_antennas, int block_size) {
  if (block_size < 1 || num_antennas % block_size != 0)
    throw DomainError("block size " + std::to_string(block_size) + " does not divide " +
                      std::to_string(num_antennas) + " antennas");
  if (num_antennas / block_size < 2) throw DomainError("multiplexing needs at least 2 blocks");
}

}  // namespace

MultiplexSchedule build_schedule(const ArrayGeometry& geom, int block_size,
                                 double steer_angle_deg) {
  check_angle(steer_angle_deg);
  check_partition(geom.size(), block_size);
  MultiplexSchedule s;
  s.num_antennas = geom.size();
  s.block_size = block_size;
  const int k = geom.size() / block_size;
  const double shift_phase =
      2.0 * kPi * block_size * geom.spacing() * std::cos(deg2rad(steer_angle_deg));

  for (int i = 1; i < k; ++i)
    s.entries.push_back({{0, i}, BlockRole::first_row, i, 0, {1.0, 0.0}});
  for (int j = 1; j < k - 1; ++j)
    s.entries.push_back({{j, k - 1}, BlockRole::last_column, k - 1, j, {1.0, 0.0}});
  s.entries.push_back({{0, 0}, BlockRole::corner, 1, 0, std::polar(1.0, -shift_phase)});
  s.entries.push_back({{k - 1, k - 1}, BlockRole::corner, k - 2, k - 1, std::polar(1.0, shift_phase)});
  return s;
}

AssemblyResult assemble_hankel(const std::map<BlockId, CMatrix>& blocks, int num_antennas,
                               int block_size, std::optional<double> tolerance) {
  check_partition(num_antennas, block_size);
  const int k = num_antennas / block_size;
  const auto order = canonical_order(k);
  if (blocks.size() != order.size()) {
    for (const auto& [id, _] : blocks) {
      bool required = false;
      for (const auto& r : order) required = required || r == id;
      if (!required) throw DomainError("unexpected block " + to_string(id));
    }
  }

  const int diagonals = 2 * num_antennas - 1;
  std::vector<cdouble> value(diagonals);
  std::vector<bool> filled(diagonals, false);
  double max_disc = 0.0;
  double max_abs = 0.0;
  for (const auto& id : order) {
    auto it = blocks.find(id);
    if (it == blocks.end()) throw AssemblyError("missing block " + to_string(id), 0.0);
    const CMatrix& blk = it->second;
    if (blk.rows() != block_size || blk.cols() != block_size)
      throw DomainError("block " + to_string(id) + " has wrong shape");
    for (int a = 0; a < block_size; ++a)
      for (int b = 0; b < block_size; ++b) {
        const int d = id.row * block_size + a + id.col * block_size + b;
        const cdouble v = blk(a, b);
        max_abs = std::max(max_abs, std::abs(v));
        if (!filled[d]) {
          value[d] = v;
          filled[d] = true;
        } else {
          max_disc = std::max(max_disc, std::abs(v - value[d]));
        }
      }
  }

  AssemblyResult out;
  out.y.resize(num_antennas, num_antennas);
  for (int p = 0; p < num_antennas; ++p)
    for (int q = 0; q < num_antennas; ++q) out.y(p, q) = value[p + q];
  out.max_discrepancy = max_disc;
  out.relative_discrepancy = max_abs > 0.0 ? max_disc / max_abs : max_disc;
  if (tolerance && out.relative_discrepancy > *tolerance) {
    std::ostringstream msg;
    msg << "overlapping blocks disagree: relative discrepancy " << out.relative_discrepancy
        << " exceeds " << *tolerance;
    throw AssemblyError(msg.str(), max_disc);
  }
  return out;
}

std::map<BlockId, CMatrix> collect_blocks(const ArrayGeometry& geom, const Scenario& scenario,
                                          const WaveformSet& waveforms,
                                          const MultiplexSchedule& schedule,
                                          const ReflectionDraw& draw, PulseRng& rng) {
  std::map<BlockId, CMatrix> blocks;
  for (const auto& e : schedule.entries) {
    const PulseSnapshot snap =
        simulate_pulse(geom, scenario, waveforms, schedule.block_indices(e.tx_block),
                       schedule.block_indices(e.rx_block), draw, e.tx_rotation, rng);
    blocks.emplace(e.block, matched_filter(snap, waveforms));
  }
  return blocks;
}

namespace {

// Accumulates sum y y^H in column batches so the update is a single GEMM.
class CovarianceAccumulator {
 public:
  explicit CovarianceAccumulator(Eigen::Index dim) : sum_(CMatrix::Zero(dim, dim)), batch_(dim, kBatch) {}

  void add(const CVector& y) {
    batch_.col(used_++) = y;
    if (used_ == kBatch) flush();
  }

  CMatrix finish(long count) {
    flush();
    CMatrix r = sum_ / static_cast<double>(count);
    // Exact Hermitian symmetry; GEMM rounding leaves ~1e-16 asymmetry.
    return (r + r.adjoint()) / 2.0;
  }

 private:
  static constexpr Eigen::Index kBatch = 64;

  void flush() {
    if (used_ == 0) return;
    const auto cols = batch_.leftCols(used_);
    sum_.noalias() += cols * cols.adjoint();
    used_ = 0;
  }

  CMatrix sum_;
  CMatrix batch_;
  Eigen::Index used_ = 0;
};

}  // namespace

VirtualCovariance sense_full_covariance(const ArrayGeometry& geom, const Scenario& scenario,
                                        const WaveformSet& waveforms, int block_size,
                                        long num_pulses, const SensingOptions& options) {
  if (num_pulses < 1) throw DomainError("sensing needs at least one pulse");
  scenario.validate_physics();
  const double steer =
      options.steer_angle_deg ? *options.steer_angle_deg : scenario.target().angle_deg;
  const MultiplexSchedule schedule = build_schedule(geom, block_size, steer);
  const int m = geom.size();
  const int nd = 2 * m - 1;

  CovarianceAccumulator acc(nd);
  CVector h(nd);
  double worst = 0.0;
  for (long t = 0; t < num_pulses; ++t) {
    PulseRng rng(scenario.rng_seed, static_cast<std::uint64_t>(options.first_pulse + t));
    const ReflectionDraw draw = draw_reflections(scenario, rng);
    const auto blocks = collect_blocks(geom, scenario, waveforms, schedule, draw, rng);
    const AssemblyResult y = assemble_hankel(blocks, m, block_size);
    worst = std::max(worst, y.max_discrepancy);
    for (int d = 0; d < nd; ++d) h[d] = d < m ? y.y(0, d) : y.y(d - m + 1, m - 1);
    acc.add(h);
  }
  CMatrix rh = acc.finish(num_pulses);

  double floor = 0.0;
  if (options.whiten_noise) {
    floor = scenario.noise_power * scenario.signal_power;
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(rh);
    const RVector lam = (eig.eigenvalues().array() - floor).max(0.0).matrix();
    rh = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().adjoint();
  }

  const int dim = geom.virtual_size();
  VirtualCovariance cov;
  cov.matrix.resize(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) cov.matrix(i, j) = rh(i / m + i % m, j / m + j % m);
  cov.matrix.diagonal().array() += floor;
  cov.num_pulses = num_pulses;
  cov.num_antennas = m;
  cov.block_size = block_size;
  cov.max_assembly_discrepancy = worst;
  return cov;
}

VirtualCovariance sense_full_array_covariance(const ArrayGeometry& geom,
                                              const Scenario& scenario,
                                              const WaveformSet& waveforms, long num_pulses,
                                              long first_pulse) {
  if (num_pulses < 1) throw DomainError("sensing needs at least one pulse");
  const Subarray full = Subarray::full(geom.size());
  CovarianceAccumulator acc(geom.virtual_size());
  for (long t = 0; t < num_pulses; ++t) {
    const PulseSnapshot snap =
        simulate_pulse(geom, scenario, waveforms, full.tx, full.rx, first_pulse + t);
    acc.add(vectorize(matched_filter(snap, waveforms)));
  }
  VirtualCovariance cov;
  cov.matrix = acc.finish(num_pulses);
  cov.num_pulses = num_pulses;
  cov.num_antennas = geom.size();
  cov.block_size = geom.size();
  return cov;
}

int sensing_block_size(int num_antennas, int selected) {
  for (int n = std::min(selected, num_antennas / 2); n >= 1; --n)
    if (num_antennas % n == 0) return n;
  throw DomainError("no valid sensing block size");
}

double relative_frobenius(const CMatrix& estimate, const CMatrix& reference) {
  const double ref = reference.norm();
  if (ref == 0.0) return estimate.norm();
  return (estimate - reference).norm() / ref;
}

void write_covariance(std::ostream& os, const VirtualCovariance& cov) {
  os << "cogmimo-covariance " << cov.num_antennas << ' ' << cov.block_size << ' '
     << cov.num_pulses << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < cov.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < cov.matrix.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%s%.17g %.17g", j == 0 ? "" : " ",
                    cov.matrix(i, j).real(), cov.matrix(i, j).imag());
      os << buf;
    }
    os << '\n';
  }
}

VirtualCovariance read_covariance(std::istream& is) {
  std::string magic;
  VirtualCovariance cov;
  if (!(is >> magic >> cov.num_antennas >> cov.block_size >> cov.num_pulses) ||
      magic != "cogmimo-covariance" || cov.num_antennas < 2)
    throw ConfigError("not a covariance dump");
  const int n = cov.num_antennas * cov.num_antennas;
  cov.matrix.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double re = 0.0, im = 0.0;
      if (!(is >> re >> im)) throw ConfigError("truncated covariance dump");
      cov.matrix(i, j) = {re, im};
    }
  return cov;
}

}  // namespace cogmimo
