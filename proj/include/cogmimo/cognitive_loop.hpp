// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cogmimo/beamformer.hpp"
#include "cogmimo/core_model.hpp"
#include "cogmimo/sparse_selector.hpp"

namespace cogmimo {

enum class CyclePhase { operating, sensing, learning };

std::string to_string(CyclePhase phase);

struct TriggerPolicy {
  double drop_threshold_db = 3.0;
  int reference_window = 50;  // operating pulses averaged into the reference
  int learning_pulses = 10;   // pulses spent on selection before reconfiguring

  void validate() const;
};

struct SensingConfig {
  long pulses = 2000;
  int waveform_length = 0;           // 0 means M
  std::optional<int> block_size;     // unset: largest divisor of M not above N
  double waveform_power = 1.0;

  void validate(int num_antennas) const;
};

/// Scenario that becomes active at `pulse` and stays active until the next entry.
struct TimelineEntry {
  long pulse = 0;
  Scenario scenario;
};

/// Where the deployed weights come from once a configuration is chosen.
/// `sensed`: the selector's Capon weights on the sensed covariance.
/// `analytic`: Capon weights on the selected subarray's exact covariance for
/// the scene that was sensed (a fully trained beamformer); the selection
/// itself still comes from the sensed covariance.
enum class WeightSource { analytic, sensed };

std::string to_string(WeightSource source);
WeightSource parse_weight_source(const std::string& name);

struct CycleConfig {
  SelectorConfig selector;
  TriggerPolicy policy;
  SensingConfig sensing;
  WeightSource weights = WeightSource::analytic;
  // On reconfiguration, keep the deployed pair when it outscores the new
  // selection on the freshly sensed covariance.
  bool keep_if_better = true;
  long total_pulses = 1000;
};

struct CycleState {
  SelectionPair selection;
  BeamformerSolution weights;
  std::vector<std::pair<long, double>> sinr_history;  // operating pulses only
  CyclePhase phase = CyclePhase::operating;
};

struct TraceRow {
  long pulse = 0;
  CyclePhase phase = CyclePhase::operating;
  double sinr_db = 0.0;  // NaN outside operating pulses
  std::string event;
};

struct Reconfiguration {
  long trigger_pulse = 0;
  long resume_pulse = 0;
  Subarray before;
  Subarray after;
  double stale_sinr_db = 0.0;  // old configuration under the scene sensed
  double fresh_sinr_db = 0.0;  // new configuration under the same scene
};

struct CycleTrace {
  std::vector<TraceRow> rows;
  Subarray initial;
  double initial_sinr_db = 0.0;
  std::vector<Reconfiguration> reconfigurations;
  CycleState final_state;
  bool aborted = false;
  std::string diagnostic;

  void write_csv(std::ostream& os) const;
};

/// Output SINR (dB) of the deployed weights under `scenario`'s analytic
/// interference-plus-noise covariance.
double evaluate_current(const BeamformerSolution& weights, const SelectionPair& selection,
                        const ArrayGeometry& geom, const Scenario& scenario);

/// Multiplexed sensing followed by selection on the sensed covariance; the
/// look direction is the scenario's target.
SelectionOutcome sense_and_select(const ArrayGeometry& geom, const Scenario& scenario,
                                  const SensingConfig& sensing, const SelectorConfig& selector,
                                  long first_pulse);

/// Perception-action loop. An initial design is made before pulse 0 from a
/// sensing pass on the first scenario. Each operating pulse is scored with
/// the oracle SINR of the active scene; a drop of at least the policy
/// threshold below the running reference starts sensing, then learning,
/// then the new configuration goes live. Infeasible selection ends the trace
/// early with `aborted` set.
CycleTrace run_cycle(const ArrayGeometry& geom, const std::vector<TimelineEntry>& timeline,
                     const CycleConfig& cfg);

}  // namespace cogmimo
