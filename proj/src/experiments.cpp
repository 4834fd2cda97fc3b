// SPDX-License-Identifier: Apache-2.0
#include "cogmimo/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cogmimo/beamformer.hpp"
#include "cogmimo/errors.hpp"

namespace cogmimo {

using nlohmann::json;

std::string to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::example1: return "example1";
    case ExperimentId::example2: return "example2";
    case ExperimentId::example3: return "example3";
    case ExperimentId::example4: return "example4";
    case ExperimentId::custom: return "custom";
  }
  return "custom";
}

ExperimentId parse_experiment_id(const std::string& name) {
  if (name == "example1" || name == "1") return ExperimentId::example1;
  if (name == "example2" || name == "2") return ExperimentId::example2;
  if (name == "example3" || name == "3") return ExperimentId::example3;
  if (name == "example4" || name == "4") return ExperimentId::example4;
  if (name == "custom") return ExperimentId::custom;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::vector<double> SweepGrid::angles() const {
  validate();
  std::vector<double> out;
  const long count = static_cast<long>(std::floor((stop_deg - start_deg) / step_deg + 1e-9)) + 1;
  for (long k = 0; k < count; ++k) out.push_back(start_deg + static_cast<double>(k) * step_deg);
  return out;
}

void SweepGrid::validate() const {
  if (!(step_deg > 0.0)) throw ConfigError("sweep step must be positive");
  if (!(start_deg > 0.0 && stop_deg < 180.0 && start_deg <= stop_deg))
    throw ConfigError("sweep range must lie inside (0, 180) with start <= stop");
}

std::vector<TimelineEntry> ExperimentSpec::timeline() const {
  std::vector<TimelineEntry> out{{0, scenario}};
  for (const SceneEvent& e : events) {
    Scenario s = scenario;
    s.sources = e.sources;
    out.push_back({e.pulse, std::move(s)});
  }
  return out;
}

void ExperimentSpec::validate() const {
  try {
    const ArrayGeometry geom = geometry();
    scenario.validate();
    for (const auto& s : scenario.sources) check_angle(s.angle_deg);
    selector.validate();
    sensing.validate(geom.size());
    policy.validate();
    if (total_pulses < 1) throw ConfigError("timeline needs at least one pulse");
    long last = 0;
    for (const auto& e : events) {
      if (e.pulse <= last) throw ConfigError("scene events must have increasing pulses > 0");
      last = e.pulse;
      Scenario s = scenario;
      s.sources = e.sources;
      s.validate();
    }
    sweep.validate();
    for (double o : offsets_deg)
      if (!(o > 0.0)) throw ConfigError("interferer offsets must be positive");
    for (const auto& a : arrays) ArrayGeometry(a.num_antennas, a.spacing);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

ExperimentSpec default_spec(ExperimentId id) {
  ExperimentSpec s;
  s.id = id;
  s.selector.num_selected = 4;
  const auto target = [](double a) { return SourceDescriptor{SourceKind::target, a, 20.0}; };
  const auto deceptive = [](double a) { return SourceDescriptor{SourceKind::deceptive, a, 15.0}; };
  switch (id) {
    case ExperimentId::example1:
      s.scenario.sources = {target(65.0), deceptive(50.0), deceptive(60.0)};
      s.events = {{200, {target(65.0), deceptive(50.0), deceptive(60.0), deceptive(63.0)}}};
      s.total_pulses = 2600;
      s.policy.learning_pulses = 20;
      break;
    case ExperimentId::example2:
      s.scenario.sources = {target(65.0), deceptive(60.0), deceptive(70.0)};
      s.sweep = {5.0, 90.0, 5.0};
      break;
    case ExperimentId::example3:
      s.scenario.sources = {target(65.0)};
      s.sweep = {10.0, 90.0, 5.0};
      s.offsets_deg = {5.0, 3.0};
      break;
    case ExperimentId::example4:
      s.scenario.sources = {target(65.0), deceptive(60.0), deceptive(70.0)};
      s.sweep = {5.0, 90.0, 5.0};
      s.arrays = {{18, 0.5}, {24, 0.5}, {18, 1.0}};
      break;
    case ExperimentId::custom:
      s.scenario.sources = {target(65.0), deceptive(50.0), deceptive(60.0)};
      break;
  }
  return s;
}

namespace {

// Rejects keys outside `allowed` so typos surface as config errors.
void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

std::vector<SourceDescriptor> parse_sources(const json& arr) {
  if (!arr.is_array()) throw ConfigError("sources must be an array");
  std::vector<SourceDescriptor> out;
  for (const json& s : arr) {
    check_keys(s, {"kind", "angle_deg", "power_db"}, "source");
    if (!s.contains("kind") || !s.contains("angle_deg") || !s.contains("power_db"))
      throw ConfigError("source needs kind, angle_deg and power_db");
    out.push_back({parse_source_kind(s.at("kind").get<std::string>()),
                   s.at("angle_deg").get<double>(), s.at("power_db").get<double>()});
  }
  return out;
}

void parse_into(const json& doc, ExperimentSpec& spec) {
  check_keys(doc,
             {"experiment", "m", "d_over_lambda", "sigma_s2", "noise_power", "seed", "sources",
              "selector", "sensing", "policy", "timeline", "sweep", "arrays"},
             "config");
  if (doc.contains("experiment"))
    spec.id = parse_experiment_id(doc.at("experiment").get<std::string>());
  read(doc, "m", spec.array.num_antennas);
  read(doc, "d_over_lambda", spec.array.spacing);
  read(doc, "sigma_s2", spec.scenario.signal_power);
  read(doc, "noise_power", spec.scenario.noise_power);
  read(doc, "seed", spec.scenario.rng_seed);
  if (doc.contains("sources")) spec.scenario.sources = parse_sources(doc.at("sources"));

  if (doc.contains("selector")) {
    const json& j = doc.at("selector");
    check_keys(j,
               {"num_selected", "alpha", "beta", "alpha0", "beta0", "epsilon", "max_outer_iters",
                "binary_tol", "subproblem_tol", "isolation", "refine", "refine_starts"},
               "selector");
    SelectorConfig& c = spec.selector;
    read(j, "num_selected", c.num_selected);
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("beta")) c.beta = j.at("beta").get<double>();
    read(j, "alpha0", c.alpha0);
    read(j, "beta0", c.beta0);
    read(j, "epsilon", c.epsilon);
    read(j, "max_outer_iters", c.max_outer_iters);
    read(j, "binary_tol", c.binary_tol);
    read(j, "subproblem_tol", c.subproblem_tol);
    read(j, "isolation", c.isolation);
    read(j, "refine", c.refine);
    read(j, "refine_starts", c.refine_starts);
  }
  if (doc.contains("sensing")) {
    const json& j = doc.at("sensing");
    check_keys(j, {"pulses", "waveform_length", "block_size", "waveform_power"}, "sensing");
    read(j, "pulses", spec.sensing.pulses);
    read(j, "waveform_length", spec.sensing.waveform_length);
    read(j, "waveform_power", spec.sensing.waveform_power);
    if (j.contains("block_size")) spec.sensing.block_size = j.at("block_size").get<int>();
  }
  if (doc.contains("policy")) {
    const json& j = doc.at("policy");
    check_keys(j,
               {"drop_threshold_db", "reference_window", "learning_pulses", "weights",
                "keep_if_better"},
               "policy");
    if (j.contains("weights")) spec.weights = parse_weight_source(j.at("weights").get<std::string>());
    read(j, "drop_threshold_db", spec.policy.drop_threshold_db);
    read(j, "reference_window", spec.policy.reference_window);
    read(j, "learning_pulses", spec.policy.learning_pulses);
    read(j, "keep_if_better", spec.keep_if_better);
  }
  if (doc.contains("timeline")) {
    const json& j = doc.at("timeline");
    check_keys(j, {"total_pulses", "events"}, "timeline");
    read(j, "total_pulses", spec.total_pulses);
    if (j.contains("events")) {
      spec.events.clear();
      for (const json& e : j.at("events")) {
        check_keys(e, {"pulse", "sources"}, "timeline event");
        if (!e.contains("pulse") || !e.contains("sources"))
          throw ConfigError("timeline event needs pulse and sources");
        spec.events.push_back({e.at("pulse").get<long>(), parse_sources(e.at("sources"))});
      }
    }
  }
  if (doc.contains("sweep")) {
    const json& j = doc.at("sweep");
    check_keys(j, {"start_deg", "stop_deg", "step_deg", "offsets_deg", "interferer_power_db"},
               "sweep");
    read(j, "start_deg", spec.sweep.start_deg);
    read(j, "stop_deg", spec.sweep.stop_deg);
    read(j, "step_deg", spec.sweep.step_deg);
    read(j, "offsets_deg", spec.offsets_deg);
    read(j, "interferer_power_db", spec.interferer_power_db);
  }
  if (doc.contains("arrays")) {
    spec.arrays.clear();
    for (const json& a : doc.at("arrays")) {
      check_keys(a, {"m", "d_over_lambda"}, "array");
      ArrayConfig cfg;
      read(a, "m", cfg.num_antennas);
      read(a, "d_over_lambda", cfg.spacing);
      spec.arrays.push_back(cfg);
    }
  }
}

}  // namespace

ExperimentSpec parse_spec(const std::string& json_text, ExperimentSpec base) {
  try {
    parse_into(json::parse(json_text), base);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  base.validate();
  return base;
}

ExperimentSpec load_spec(const std::filesystem::path& path, ExperimentSpec base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str(), std::move(base));
}

Subarray conventional_transceiver(int num_antennas, int num_selected) {
  if (num_selected < 1 || 4 * (num_selected - 1) >= num_antennas - num_selected)
    throw DomainError("conventional layout does not fit " + std::to_string(num_antennas) +
                      " antennas");
  Subarray s;
  for (int k = 0; k < num_selected; ++k) s.tx.push_back(4 * k);
  for (int k = num_antennas - num_selected; k < num_antennas; ++k) s.rx.push_back(k);
  return s;
}

Example1Result run_example1(const ExperimentSpec& spec) {
  spec.validate();
  CycleConfig cfg;
  cfg.selector = spec.selector;
  cfg.policy = spec.policy;
  cfg.sensing = spec.sensing;
  cfg.weights = spec.weights;
  cfg.keep_if_better = spec.keep_if_better;
  cfg.total_pulses = spec.total_pulses;
  return {run_cycle(spec.geometry(), spec.timeline(), cfg)};
}

std::string format_indices(const IndexList& idx) {
  std::string out;
  for (int i : idx) {
    if (!out.empty()) out += ' ';
    out += std::to_string(i);
  }
  return out;
}

std::string format_number(double v, int precision) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

void write_example1(const Example1Result& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream os(out_dir / "example1_trace.csv");
    result.trace.write_csv(os);
  }
  std::ofstream os(out_dir / "example1_configs.csv");
  os << "configuration,from_pulse,tx,rx,sinr_db,stale_sinr_db\n";
  const CycleTrace& tr = result.trace;
  if (tr.aborted && tr.rows.empty()) return;  // no initial design
  os << "1,0," << format_indices(tr.initial.tx) << ',' << format_indices(tr.initial.rx) << ','
     << format_number(tr.initial_sinr_db) << ",\n";
  int k = 2;
  for (const Reconfiguration& r : tr.reconfigurations)
    os << k++ << ',' << r.resume_pulse << ',' << format_indices(r.after.tx) << ','
       << format_indices(r.after.rx) << ',' << format_number(r.fresh_sinr_db) << ','
       << format_number(r.stale_sinr_db) << '\n';
}

Scenario sweep_scene(const ExperimentSpec& spec, double look_deg, double offset_deg) {
  Scenario s = spec.scenario;
  if (offset_deg > 0.0) {
    const double power = s.target().power_db;
    s.sources = {{SourceKind::target, look_deg, power},
                 {SourceKind::deceptive, look_deg - offset_deg, spec.interferer_power_db},
                 {SourceKind::deceptive, look_deg + offset_deg, spec.interferer_power_db}};
  } else {
    for (auto& src : s.sources)
      if (src.kind == SourceKind::target) src.angle_deg = look_deg;
  }
  for (const auto& src : s.sources) check_angle(src.angle_deg);
  return s;
}

namespace {

std::vector<SweepRow> sweep(const ExperimentSpec& spec, const ArrayConfig& array,
                            double offset_deg, const std::string& label) {
  const ArrayGeometry geom(array.num_antennas, array.spacing);
  std::optional<Subarray> conv;
  try {
    conv = conventional_transceiver(geom.size(), spec.selector.num_selected);
  } catch (const DomainError&) {
  }
  std::vector<SweepRow> rows;
  for (double look : spec.sweep.angles()) {
    const Scenario scene = sweep_scene(spec, look, offset_deg);
    const SelectionOutcome out =
        select_transceiver(oracle_covariance(geom, scene), geom, look, spec.selector);
    SweepRow row;
    row.label = label;
    row.num_antennas = geom.size();
    row.spacing = geom.spacing();
    row.look_angle_deg = look;
    row.selection = out.selection.subarray();
    row.optimal_sinr_db = output_sinr_db(out.beam.weights, geom, scene, row.selection);
    row.conventional_sinr_db =
        conv ? optimal_sinr_db(geom, scene, *conv) : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string offset_label(double offset) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "offset_%g", offset);
  return buf;
}

}  // namespace

std::vector<SweepRow> run_example2_3(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.offsets_deg.empty()) return sweep(spec, spec.array, 0.0, "fixed");
  std::vector<SweepRow> rows;
  for (double off : spec.offsets_deg) {
    auto part = sweep(spec, spec.array, off, offset_label(off));
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::vector<SweepRow> run_example4(const ExperimentSpec& spec) {
  spec.validate();
  const std::vector<ArrayConfig> arrays =
      spec.arrays.empty() ? std::vector<ArrayConfig>{spec.array} : spec.arrays;
  std::vector<SweepRow> rows;
  for (const ArrayConfig& a : arrays) {
    char label[64];
    std::snprintf(label, sizeof label, "M%d_d%g", a.num_antennas, a.spacing);
    auto part = sweep(spec, a, 0.0, label);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "case,num_antennas,d_over_lambda,look_angle_deg,optimal_sinr_db,conventional_sinr_db,"
        "improvement_db,tx,rx\n";
  for (const SweepRow& r : rows) {
    os << r.label << ',' << r.num_antennas << ',' << format_number(r.spacing, 3) << ','
       << format_number(r.look_angle_deg, 3) << ',' << format_number(r.optimal_sinr_db) << ','
       << format_number(r.conventional_sinr_db) << ','
       << format_number(r.optimal_sinr_db - r.conventional_sinr_db) << ','
       << format_indices(r.selection.tx) << ',' << format_indices(r.selection.rx) << '\n';
  }
}

}  // namespace cogmimo
