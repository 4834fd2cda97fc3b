// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cogmimo/cognitive_loop.hpp"
#include "cogmimo/core_model.hpp"
#include "cogmimo/sparse_selector.hpp"

namespace cogmimo {

enum class ExperimentId { example1, example2, example3, example4, custom };

std::string to_string(ExperimentId id);
ExperimentId parse_experiment_id(const std::string& name);

struct SweepGrid {
  double start_deg = 5.0;
  double stop_deg = 90.0;
  double step_deg = 5.0;

  /// start, start+step, ... up to stop inclusive (with a small tolerance).
  std::vector<double> angles() const;
  void validate() const;
};

struct ArrayConfig {
  int num_antennas = 18;
  double spacing = 0.5;
};

/// Scene-change event: from `pulse` on, these sources replace the current ones.
struct SceneEvent {
  long pulse = 0;
  std::vector<SourceDescriptor> sources;
};

struct ExperimentSpec {
  ExperimentId id = ExperimentId::custom;
  ArrayConfig array;
  Scenario scenario;  // scene at pulse 0; its target angle is replaced in sweeps
  SelectorConfig selector;
  SensingConfig sensing;
  TriggerPolicy policy;
  WeightSource weights = WeightSource::analytic;
  bool keep_if_better = true;
  long total_pulses = 1000;
  std::vector<SceneEvent> events;
  SweepGrid sweep;
  /// Non-empty: sweep cases with two deceptive sources at look +/- offset.
  std::vector<double> offsets_deg;
  double interferer_power_db = 15.0;  // for offset cases
  std::vector<ArrayConfig> arrays;    // multi-array sweep

  ArrayGeometry geometry() const { return ArrayGeometry(array.num_antennas, array.spacing); }
  std::vector<TimelineEntry> timeline() const;
  void set_seed(std::uint64_t seed) { scenario.rng_seed = seed; }
  void validate() const;
};

/// Built-in settings for the four experiments (custom returns plain defaults).
ExperimentSpec default_spec(ExperimentId id);

/// Overlays a JSON document on `base`. Unknown keys, wrong types and invalid
/// values raise ConfigError.
ExperimentSpec parse_spec(const std::string& json_text, ExperimentSpec base);
ExperimentSpec load_spec(const std::filesystem::path& path, ExperimentSpec base);

/// Fixed comparison layout: transmit at 0, 4, 8, ... and receive on the last
/// N antennas (0, 4, 8, 12 / 14..17 for M = 18, N = 4). Exempt from isolation.
Subarray conventional_transceiver(int num_antennas, int num_selected);

struct Example1Result {
  CycleTrace trace;
};

Example1Result run_example1(const ExperimentSpec& spec);
void write_example1(const Example1Result& result, const std::filesystem::path& out_dir);

struct SweepRow {
  std::string label;
  int num_antennas = 0;
  double spacing = 0.0;
  double look_angle_deg = 0.0;
  double optimal_sinr_db = 0.0;
  double conventional_sinr_db = 0.0;  // NaN when the layout does not fit
  Subarray selection;
};

/// Scene for one sweep point: the spec's sources with the target moved to
/// `look_deg`, or two deceptive sources at look +/- offset when offset > 0.
Scenario sweep_scene(const ExperimentSpec& spec, double look_deg, double offset_deg);

/// Per look angle, selection on the analytic covariance against the
/// conventional layout. One case per offset when offsets are given.
std::vector<SweepRow> run_example2_3(const ExperimentSpec& spec);

/// The example-2 sweep repeated for each array configuration.
std::vector<SweepRow> run_example4(const ExperimentSpec& spec);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// Space-separated 0-based indices.
std::string format_indices(const IndexList& idx);

/// Fixed-precision number for CSV output; NaN prints empty, infinities as +/-inf.
std::string format_number(double v, int precision = 6);

}  // namespace cogmimo
