// SPDX-License-Identifier: Apache-2.0
// Command-line front end: simulation, sensing, selection, the perception-action
// cycle and the four built-in experiments. Every output is a CSV or text file
// under --out; a fixed seed reproduces them byte for byte.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cogmimo/cognitive_loop.hpp"
#include "cogmimo/covariance_builder.hpp"
#include "cogmimo/errors.hpp"
#include "cogmimo/experiments.hpp"
#include "cogmimo/waveform_mf.hpp"

namespace fs = std::filesystem;
using namespace cogmimo;

namespace {

enum ExitCode { kOk = 0, kUnexpected = 1, kConfig = 2, kInfeasible = 3, kSolver = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<long> pulses;
  bool verbose = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "random seed (overrides the config)");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--pulses", c.pulses, "number of pulses (meaning depends on the command)")
      ->check(CLI::PositiveNumber);
  app->add_flag("--verbose", c.verbose, "progress messages on stderr");
}

ExperimentSpec resolve(const Common& c, ExperimentId id) {
  ExperimentSpec spec = default_spec(id);
  if (!c.config.empty()) spec = load_spec(c.config, spec);
  if (c.seed) spec.set_seed(*c.seed);
  spec.validate();
  return spec;
}

fs::path out_dir(const Common& c) {
  fs::create_directories(c.out);
  return fs::path(c.out);
}

void log(const Common& c, const std::string& msg) {
  if (c.verbose) std::cerr << msg << '\n';
}

int cmd_simulate(const Common& c) {
  const ExperimentSpec spec = resolve(c, ExperimentId::custom);
  const ArrayGeometry geom = spec.geometry();
  const long pulses = c.pulses.value_or(10);
  const int m = geom.size();
  const WaveformSet wf = generate_waveforms(
      m, spec.sensing.waveform_length == 0 ? m : spec.sensing.waveform_length,
      spec.sensing.waveform_power);
  const Subarray full = Subarray::full(m);
  std::ofstream os(out_dir(c) / "simulate.csv");
  os << "pulse,rx,tx,re,im\n";
  for (long t = 0; t < pulses; ++t) {
    const CMatrix y = matched_filter(simulate_pulse(geom, spec.scenario, wf, full.tx, full.rx, t), wf);
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q)
        os << t << ',' << p << ',' << q << ',' << format_number(y(p, q).real(), 9) << ','
           << format_number(y(p, q).imag(), 9) << '\n';
  }
  log(c, "simulated " + std::to_string(pulses) + " pulses");
  return kOk;
}

int cmd_sense(const Common& c) {
  const ExperimentSpec spec = resolve(c, ExperimentId::custom);
  const ArrayGeometry geom = spec.geometry();
  const int m = geom.size();
  const long pulses = c.pulses.value_or(spec.sensing.pulses);
  const int block = spec.sensing.block_size
                        ? *spec.sensing.block_size
                        : sensing_block_size(m, spec.selector.num_selected);
  const WaveformSet wf = generate_waveforms(
      m, spec.sensing.waveform_length == 0 ? m : spec.sensing.waveform_length,
      spec.sensing.waveform_power);
  const VirtualCovariance cov = sense_full_covariance(geom, spec.scenario, wf, block, pulses);
  const fs::path dir = out_dir(c);
  {
    std::ofstream os(dir / "covariance.txt");
    write_covariance(os, cov);
  }
  std::ofstream os(dir / "sense_summary.csv");
  os << "num_antennas,block_size,pulses,relative_error_to_oracle,max_assembly_discrepancy\n";
  os << m << ',' << block << ',' << pulses << ','
     << format_number(relative_frobenius(cov.matrix, oracle_covariance(geom, spec.scenario)), 9)
     << ',' << format_number(cov.max_assembly_discrepancy, 9) << '\n';
  log(c, "sensed " + std::to_string(pulses) + " pulses with block size " + std::to_string(block));
  return kOk;
}

void write_selection(std::ostream& os, const SelectionOutcome& out, double sinr_db) {
  const Subarray s = out.selection.subarray();
  auto vec = [](const RVector& v) {
    std::string t;
    for (Eigen::Index i = 0; i < v.size(); ++i) t += (i ? " " : "") + format_number(v[i], 6);
    return t;
  };
  os << "tx: " << format_indices(s.tx) << '\n'
     << "rx: " << format_indices(s.rx) << '\n'
     << "relaxed_c: " << vec(out.relaxed.c) << '\n'
     << "relaxed_r: " << vec(out.relaxed.r) << '\n'
     << "outer_iterations: " << out.outer_iterations << '\n'
     << "converged_binary: " << (out.converged_binary ? "yes" : "no") << '\n'
     << "rounding_fallback: " << (out.rounding_fallback ? "yes" : "no") << '\n'
     << "refinement_swaps: " << out.refinement_swaps << '\n'
     << "sinr_db: " << format_number(sinr_db) << '\n';
}

int cmd_select(const Common& c, const std::string& covariance_path) {
  const ExperimentSpec spec = resolve(c, ExperimentId::custom);
  const ArrayGeometry geom = spec.geometry();
  SelectionOutcome out;
  if (!covariance_path.empty()) {
    std::ifstream in(covariance_path);
    if (!in) throw ConfigError("cannot open covariance file " + covariance_path);
    const VirtualCovariance cov = read_covariance(in);
    if (cov.num_antennas != geom.size())
      throw ConfigError("covariance file is for a different array size");
    out = select_transceiver(cov.matrix, geom, spec.scenario.target().angle_deg, spec.selector);
  } else if (c.pulses) {
    SensingConfig sensing = spec.sensing;
    sensing.pulses = *c.pulses;
    out = sense_and_select(geom, spec.scenario, sensing, spec.selector, 0);
  } else {
    out = select_transceiver(oracle_covariance(geom, spec.scenario), geom,
                             spec.scenario.target().angle_deg, spec.selector);
  }
  const double sinr = output_sinr_db(out.beam.weights, geom, spec.scenario, out.selection.subarray());
  std::ofstream os(out_dir(c) / "selection.txt");
  write_selection(os, out, sinr);
  if (c.verbose) write_selection(std::cerr, out, sinr);
  return kOk;
}

int finish_cycle(const Common& c, const Example1Result& res, const std::string& stem) {
  const fs::path dir = out_dir(c);
  if (stem == "example1") {
    write_example1(res, dir);
  } else {
    std::ofstream os(dir / (stem + "_trace.csv"));
    res.trace.write_csv(os);
  }
  for (const auto& r : res.trace.reconfigurations) {
    log(c, "reconfigured at pulse " + std::to_string(r.resume_pulse) + ": " +
               format_number(r.stale_sinr_db, 2) + " dB -> " + format_number(r.fresh_sinr_db, 2) +
               " dB");
    // Example 1 is expected to keep its transmit set across the event.
    if (stem == "example1" && r.before.tx != r.after.tx)
      std::cerr << "warning: transmit set changed at pulse " << r.resume_pulse << " ("
                << format_indices(r.before.tx) << " -> " << format_indices(r.after.tx) << ")\n";
  }
  if (res.trace.aborted) {
    std::cerr << "cycle aborted: " << res.trace.diagnostic << '\n';
    return kInfeasible;
  }
  return kOk;
}

int cmd_cycle(const Common& c, ExperimentId id, const std::string& stem) {
  ExperimentSpec spec = resolve(c, id);
  if (c.pulses) spec.total_pulses = *c.pulses;
  return finish_cycle(c, run_example1(spec), stem);
}

int cmd_example(const Common& c, int which) {
  const ExperimentId id = parse_experiment_id(std::to_string(which));
  if (id == ExperimentId::example1) return cmd_cycle(c, id, "example1");
  const ExperimentSpec spec = resolve(c, id);
  const auto rows = id == ExperimentId::example4 ? run_example4(spec) : run_example2_3(spec);
  std::ofstream os(out_dir(c) / ("example" + std::to_string(which) + "_sweep.csv"));
  write_sweep_csv(os, rows);
  log(c, "wrote " + std::to_string(rows.size()) + " sweep rows");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cognitive sparse MIMO transceiver simulator"};
  app.require_subcommand(1);
  Common common;

  auto* sim = app.add_subcommand("simulate", "matched-filter outputs of full-array pulses");
  add_common(sim, common);
  auto* sense = app.add_subcommand("sense", "multiplexed sensing of the full virtual covariance");
  add_common(sense, common);
  auto* select = app.add_subcommand("select", "transceiver selection and Capon weights");
  add_common(select, common);
  std::string covariance_path;
  select->add_option("--covariance", covariance_path, "covariance file written by 'sense'")
      ->check(CLI::ExistingFile);
  auto* cycle = app.add_subcommand("cycle", "perception-action loop over the config timeline");
  add_common(cycle, common);
  auto* example = app.add_subcommand("example", "run one of the built-in experiments");
  add_common(example, common);
  int which = 1;
  example->add_option("id", which, "experiment number")->required()->check(CLI::Range(1, 4));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*sim) return cmd_simulate(common);
    if (*sense) return cmd_sense(common);
    if (*select) return cmd_select(common, covariance_path);
    if (*cycle) return cmd_cycle(common, ExperimentId::custom, "cycle");
    if (*example) return cmd_example(common, which);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfig;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << " (iterations " << e.iterations()
              << ", residual " << e.residual() << ")\n";
    return kSolver;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}
