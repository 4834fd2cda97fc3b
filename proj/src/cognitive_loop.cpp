// SPDX-License-Identifier: Apache-2.0
#include "cogmimo/cognitive_loop.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numeric>
#include <ostream>

#include "cogmimo/covariance_builder.hpp"
#include "cogmimo/errors.hpp"
#include "cogmimo/waveform_mf.hpp"

namespace cogmimo {

std::string to_string(CyclePhase phase) {
  switch (phase) {
    case CyclePhase::operating: return "operating";
    case CyclePhase::sensing: return "sensing";
    case CyclePhase::learning: return "learning";
  }
  return "unknown";
}

std::string to_string(WeightSource source) {
  return source == WeightSource::analytic ? "analytic" : "sensed";
}

WeightSource parse_weight_source(const std::string& name) {
  if (name == "analytic") return WeightSource::analytic;
  if (name == "sensed") return WeightSource::sensed;
  throw ConfigError("unknown weight source '" + name + "'");
}

void TriggerPolicy::validate() const {
  if (!(drop_threshold_db > 0.0)) throw DomainError("policy: drop threshold must be positive");
  if (reference_window < 1) throw DomainError("policy: reference window must be positive");
  if (learning_pulses < 0) throw DomainError("policy: learning pulses must be nonnegative");
}

void SensingConfig::validate(int num_antennas) const {
  if (pulses < 1) throw DomainError("sensing: need at least one pulse");
  if (waveform_length != 0 && waveform_length < num_antennas)
    throw DomainError("sensing: waveform length must be at least M");
  if (block_size && (*block_size < 1 || num_antennas % *block_size != 0 ||
                     num_antennas / *block_size < 2))
    throw DomainError("sensing: block size must divide M into at least two blocks");
  if (!(waveform_power > 0.0)) throw DomainError("sensing: waveform power must be positive");
}

double evaluate_current(const BeamformerSolution& weights, const SelectionPair& selection,
                        const ArrayGeometry& geom, const Scenario& scenario) {
  return output_sinr_db(weights.weights, geom, scenario, selection.subarray());
}

namespace {

VirtualCovariance sense(const ArrayGeometry& geom, const Scenario& scenario,
                        const SensingConfig& sensing, int num_selected, long first_pulse) {
  scenario.validate();
  sensing.validate(geom.size());
  const int m = geom.size();
  const int block = sensing.block_size ? *sensing.block_size : sensing_block_size(m, num_selected);
  const WaveformSet wf = generate_waveforms(
      m, sensing.waveform_length == 0 ? m : sensing.waveform_length, sensing.waveform_power);
  SensingOptions opts;
  opts.first_pulse = first_pulse;
  return sense_full_covariance(geom, scenario, wf, block, sensing.pulses, opts);
}

}  // namespace

SelectionOutcome sense_and_select(const ArrayGeometry& geom, const Scenario& scenario,
                                  const SensingConfig& sensing, const SelectorConfig& selector,
                                  long first_pulse) {
  const VirtualCovariance cov = sense(geom, scenario, sensing, selector.num_selected, first_pulse);
  return select_transceiver(cov.matrix, geom, scenario.target().angle_deg, selector);
}

namespace {

// Design for `scene`: selection from a sensing pass, weights per `source`.
// With a deployed configuration, the learner keeps it (re-adapted) unless the
// new selection scores better. The score uses the same covariance the weights
// come from: exact subarray covariances for analytic weights, else the sensed one.
SelectionOutcome design(const ArrayGeometry& geom, const Scenario& scene, const CycleConfig& cfg,
                        long first_pulse, const Subarray* deployed = nullptr) {
  const int m = geom.size();
  const double look = scene.target().angle_deg;
  const VirtualCovariance cov = sense(geom, scene, cfg.sensing, cfg.selector.num_selected, first_pulse);
  SelectionOutcome out = select_transceiver(cov.matrix, geom, look, cfg.selector);
  const bool analytic = cfg.weights == WeightSource::analytic;
  const CMatrix weight_cov = analytic ? oracle_covariance(geom, scene) : cov.matrix;
  const CVector b = virtual_steering(geom, look);
  bool kept = false;
  if (deployed && cfg.keep_if_better &&
      selection_merit(weight_cov, b, *deployed, m, cfg.selector.loading) >
          selection_merit(weight_cov, b, out.selection.subarray(), m, cfg.selector.loading)) {
    out.selection = SelectionPair::from_subarray(m, *deployed);
    kept = true;
  }
  if (analytic || kept) {
    const IndexList idx = out.selection.subarray().virtual_indices(m);
    out.beam = capon_weights(restrict(weight_cov, idx), restrict(b, idx), look, cfg.selector.loading);
  }
  return out;
}

void append_event(std::string& dst, const std::string& ev) {
  if (!dst.empty()) dst += ';';
  dst += ev;
}

}  // namespace

CycleTrace run_cycle(const ArrayGeometry& geom, const std::vector<TimelineEntry>& timeline,
                     const CycleConfig& cfg) {
  if (timeline.empty() || timeline.front().pulse != 0)
    throw DomainError("cycle: timeline must start with a scenario at pulse 0");
  for (std::size_t k = 1; k < timeline.size(); ++k)
    if (timeline[k].pulse <= timeline[k - 1].pulse)
      throw DomainError("cycle: timeline pulses must increase strictly");
  for (const auto& e : timeline) e.scenario.validate();
  if (cfg.total_pulses < 1) throw DomainError("cycle: need at least one pulse");
  cfg.policy.validate();
  cfg.sensing.validate(geom.size());
  cfg.selector.validate();

  CycleTrace trace;
  std::size_t active = 0;
  auto scene = [&]() -> const Scenario& { return timeline[active].scenario; };

  CycleState state;
  try {
    // Pre-roll design: pulses before 0 so the substreams never meet the timeline's.
    const SelectionOutcome first =
        design(geom, scene(), cfg, -cfg.sensing.pulses);
    state.selection = first.selection;
    state.weights = first.beam;
  } catch (const InfeasibleError& e) {
    trace.aborted = true;
    trace.diagnostic = e.what();
    return trace;
  }
  trace.initial = state.selection.subarray();
  trace.initial_sinr_db = evaluate_current(state.weights, state.selection, geom, scene());

  std::deque<double> window;
  long sensing_end = -1, learning_end = -1;
  Reconfiguration pending;
  SelectionOutcome next;

  trace.rows.reserve(static_cast<std::size_t>(cfg.total_pulses));
  for (long t = 0; t < cfg.total_pulses; ++t) {
    TraceRow row;
    row.pulse = t;
    row.sinr_db = std::numeric_limits<double>::quiet_NaN();
    if (t == 0) append_event(row.event, "start");
    while (active + 1 < timeline.size() && timeline[active + 1].pulse <= t) {
      ++active;
      append_event(row.event, "scenario_switch");
    }

    if (state.phase == CyclePhase::sensing && t > sensing_end) {
      state.phase = CyclePhase::learning;
      append_event(row.event, "learning_start");
    }
    if (state.phase == CyclePhase::learning && t > learning_end) {
      state.phase = CyclePhase::operating;
      state.selection = next.selection;
      state.weights = next.beam;
      pending.resume_pulse = t;
      trace.reconfigurations.push_back(pending);
      window.clear();
      append_event(row.event, "reconfigured");
    }

    row.phase = state.phase;
    if (state.phase == CyclePhase::operating) {
      const double sinr = evaluate_current(state.weights, state.selection, geom, scene());
      row.sinr_db = sinr;
      state.sinr_history.emplace_back(t, sinr);
      const double ref =
          window.empty() ? sinr
                         : std::accumulate(window.begin(), window.end(), 0.0) /
                               static_cast<double>(window.size());
      if (!window.empty() && ref - sinr >= cfg.policy.drop_threshold_db) {
        append_event(row.event, "trigger");
        pending = Reconfiguration{};
        pending.trigger_pulse = t;
        pending.before = state.selection.subarray();
        try {
          next = design(geom, scene(), cfg, t + 1, &pending.before);
        } catch (const InfeasibleError& e) {
          append_event(row.event, "abort");
          trace.rows.push_back(std::move(row));
          trace.aborted = true;
          trace.diagnostic = e.what();
          break;
        }
        pending.after = next.selection.subarray();
        pending.stale_sinr_db = sinr;
        pending.fresh_sinr_db = evaluate_current(next.beam, next.selection, geom, scene());
        state.phase = CyclePhase::sensing;
        sensing_end = t + cfg.sensing.pulses;
        learning_end = sensing_end + cfg.policy.learning_pulses;
      } else {
        window.push_back(sinr);
        if (static_cast<int>(window.size()) > cfg.policy.reference_window) window.pop_front();
      }
    }
    trace.rows.push_back(std::move(row));
  }
  trace.final_state = state;
  return trace;
}

void CycleTrace::write_csv(std::ostream& os) const {
  os << "pulse,phase,sinr_db,event\n";
  char buf[64];
  for (const TraceRow& r : rows) {
    os << r.pulse << ',' << to_string(r.phase) << ',';
    if (std::isinf(r.sinr_db)) {
      os << (r.sinr_db < 0 ? "-inf" : "inf");
    } else if (!std::isnan(r.sinr_db)) {
      std::snprintf(buf, sizeof buf, "%.6f", r.sinr_db);
      os << buf;
    }
    os << ',' << r.event << '\n';
  }
}

}  // namespace cogmimo
