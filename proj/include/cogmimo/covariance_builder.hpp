// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cogmimo/core_model.hpp"
#include "cogmimo/waveform_mf.hpp"

namespace cogmimo {

/// Block (row, col) of the K x K partition of the M x M data matrix, 0-based.
struct BlockId {
  int row = 0;
  int col = 0;
  auto operator<=>(const BlockId&) const = default;
};

std::string to_string(const BlockId& id);  // "Y12" style, 1-based

enum class BlockRole { first_row, last_column, corner };

/// One collection of the time-multiplexed sensing procedure.
struct ScheduleEntry {
  BlockId block;
  BlockRole role = BlockRole::first_row;
  int tx_block = 0;  // subarray actually transmitting
  int rx_block = 0;  // subarray actually receiving
  cdouble tx_rotation{1.0, 0.0};
};

/// The 2K-1 collections that measure the first block-row, the K-th
/// block-column and the two corner blocks of the data matrix.
struct MultiplexSchedule {
  int num_antennas = 0;
  int block_size = 0;
  std::vector<ScheduleEntry> entries;

  int num_blocks() const { return num_antennas / block_size; }
  IndexList block_indices(int block) const;
};

/// Builds the schedule for subarrays of `block_size` consecutive antennas.
///
/// The corner blocks are measured with a shifted transmit subarray whose codes
/// are phase-rotated to cancel the shift for a source at `steer_angle_deg`:
/// Y11 transmits from block 2 with exp(-j 2 pi N (d/lambda) cos theta0), YKK
/// from block K-1 with the conjugate rotation.
MultiplexSchedule build_schedule(const ArrayGeometry& geom, int block_size,
                                 double steer_angle_deg);

struct AssemblyResult {
  CMatrix y;
  double max_discrepancy = 0.0;       // largest |overlap - chosen| over anti-diagonals
  double relative_discrepancy = 0.0;  // max_discrepancy / max |Y|
};

/// Fills every anti-diagonal of the M x M matrix from the measured blocks.
/// The first block (in schedule order, row-major inside a block) that covers
/// an anti-diagonal defines its value. When `tolerance` is set, a relative
/// discrepancy above it raises AssemblyError.
AssemblyResult assemble_hankel(const std::map<BlockId, CMatrix>& blocks, int num_antennas,
                               int block_size, std::optional<double> tolerance = std::nullopt);

/// Runs every schedule entry for one pulse and returns the measured blocks.
std::map<BlockId, CMatrix> collect_blocks(const ArrayGeometry& geom, const Scenario& scenario,
                                          const WaveformSet& waveforms,
                                          const MultiplexSchedule& schedule,
                                          const ReflectionDraw& draw, PulseRng& rng);

/// Sample covariance of the virtual array with its pulse count.
struct VirtualCovariance {
  CMatrix matrix;
  long num_pulses = 0;
  int num_antennas = 0;
  int block_size = 0;
  double max_assembly_discrepancy = 0.0;
};

struct SensingOptions {
  /// Direction used for the corner-block phase rotation; defaults to the target.
  std::optional<double> steer_angle_deg;
  /// First pulse index; pulse m draws from substream m of the scenario seed.
  long first_pulse = 0;
  /// Assembled data carries one noise sample per anti-diagonal, so the raw
  /// estimate has fully correlated noise along anti-diagonals. When set, the
  /// known floor sigma_v^2 sigma_s^2 is removed from the anti-diagonal
  /// covariance (negative eigenvalues clipped) and restored as white noise.
  bool whiten_noise = true;
};

/// Multiplexed sensing over T pulses: per pulse, run the schedule and
/// assemble Y. The 2M-1 anti-diagonal values h give R_h = (1/T) sum h h^H and
/// R = J R_h J^H, J the Hankel expansion (equal to (1/T) sum y y^H), followed
/// by the noise correction above.
VirtualCovariance sense_full_covariance(const ArrayGeometry& geom, const Scenario& scenario,
                                        const WaveformSet& waveforms, int block_size,
                                        long num_pulses, const SensingOptions& options = {});

/// Reference sensing with every antenna active at once (no multiplexing).
VirtualCovariance sense_full_array_covariance(const ArrayGeometry& geom,
                                              const Scenario& scenario,
                                              const WaveformSet& waveforms, long num_pulses,
                                              long first_pulse = 0);

/// Largest divisor N' <= N of M with M / N' >= 2 (used when N does not divide M).
int sensing_block_size(int num_antennas, int selected);

double relative_frobenius(const CMatrix& estimate, const CMatrix& reference);

/// Text dump: header "cogmimo-covariance M N T" then M^2 rows of re/im pairs.
void write_covariance(std::ostream& os, const VirtualCovariance& cov);
VirtualCovariance read_covariance(std::istream& is);

}  // namespace cogmimo
