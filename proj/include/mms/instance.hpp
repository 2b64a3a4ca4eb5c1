#pragma once

// Problem data for mixed-model sequencing with stochastic vehicle failures:
// stations, vehicles, cycle time, failure probabilities. Also the instance
// generator and the "mms-instance/1" text format.

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mms/error.hpp"
#include "mms/fixed_point.hpp"
#include "mms/rng.hpp"

namespace mms {

enum class RiskClass { kLow, kHigh };

inline const char* to_string(RiskClass r) { return r == RiskClass::kHigh ? "high" : "low"; }

struct Station {
  int id = 0;
  Time length;

  bool operator==(const Station&) const = default;
};

struct Vehicle {
  int id = 0;
  bool is_ev = false;
  std::vector<Time> processing_times;  // indexed by station
  double failure_prob = 0.0;
  RiskClass risk_class = RiskClass::kLow;

  bool operator==(const Vehicle&) const = default;
};

struct Instance {
  Time cycle_time;
  std::vector<Station> stations;
  std::vector<Vehicle> vehicles;

  int num_stations() const { return static_cast<int>(stations.size()); }
  int num_vehicles() const { return static_cast<int>(vehicles.size()); }
  Time p(int station, int vehicle) const {
    return vehicles[vehicle].processing_times[station];
  }
  Time length(int station) const { return stations[station].length; }

  int ev_count() const {
    return static_cast<int>(std::count_if(vehicles.begin(), vehicles.end(),
                                          [](const Vehicle& v) { return v.is_ev; }));
  }

  // (l_k - c) / min_v p_kv on the untransformed processing times. Used by the
  // standard (zero-time) failure model to keep starting positions across
  // failed vehicles.
  double beta(int station) const {
    Time min_p = Time::from_ticks(std::numeric_limits<std::int64_t>::max());
    for (const Vehicle& v : vehicles) min_p = std::min(min_p, v.processing_times[station]);
    return (length(station) - cycle_time).to_double() / min_p.to_double();
  }

  bool operator==(const Instance&) const = default;
};

// Returns one human-readable line per broken invariant; empty means valid.
inline std::vector<std::string> validate(const Instance& inst) {
  std::vector<std::string> out;
  if (inst.cycle_time <= kZeroTime) out.push_back("cycle_time: must be > 0");
  if (inst.stations.empty()) out.push_back("stations: at least one station required");
  if (inst.vehicles.size() < 2) out.push_back("vehicles: at least two vehicles required");
  for (std::size_t k = 0; k < inst.stations.size(); ++k) {
    const Station& s = inst.stations[k];
    const std::string where = "stations[" + std::to_string(k) + "]";
    if (s.id != static_cast<int>(k)) out.push_back(where + ".id: must equal its index");
    if (s.length <= kZeroTime) out.push_back(where + ".length: must be > 0");
    if (s.length < inst.cycle_time) {
      out.push_back(where + ".length: station length " + s.length.to_string() +
                    " is below the cycle time " + inst.cycle_time.to_string());
    }
  }
  for (std::size_t v = 0; v < inst.vehicles.size(); ++v) {
    const Vehicle& veh = inst.vehicles[v];
    const std::string where = "vehicles[" + std::to_string(v) + "]";
    if (veh.id != static_cast<int>(v)) out.push_back(where + ".id: must equal its index");
    if (veh.processing_times.size() != inst.stations.size()) {
      out.push_back(where + ".processing_times: expected " +
                    std::to_string(inst.stations.size()) + " entries, got " +
                    std::to_string(veh.processing_times.size()));
    }
    for (std::size_t k = 0; k < veh.processing_times.size(); ++k) {
      if (veh.processing_times[k] <= kZeroTime) {
        out.push_back(where + ".processing_times[" + std::to_string(k) +
                      "]: processing time must be strictly positive");
      }
    }
    if (!(veh.failure_prob >= 0.0 && veh.failure_prob < 0.5)) {
      out.push_back(where + ".failure_prob: must lie in [0, 0.5)");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generation

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct TimeProfile {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

enum class InstanceClass { kSmall, kMedium, kLarge };

struct GeneratorConfig {
  int n_vehicles = 10;
  int n_stations = 5;
  double cycle_time = 97.0;
  std::vector<double> station_lengths;
  std::vector<TimeProfile> processing_time_profile;  // per station
  Interval ev_ratio_range{0.25, 1.0 / 3.0};
  Interval high_risk_fraction_range{0.15, 0.25};
  Interval low_risk_prob_range{0.0, 0.01};
  Interval high_risk_prob_range{0.2, 0.35};
  std::uint64_t seed = 0;

  // Five-station line with the battery station first (length two stations).
  static GeneratorConfig preset(InstanceClass cls, int n_vehicles, std::uint64_t seed) {
    GeneratorConfig cfg;
    cfg.n_vehicles = n_vehicles;
    cfg.n_stations = 5;
    cfg.cycle_time = 97.0;
    cfg.station_lengths = {240.0, 120.0, 120.0, 120.0, 120.0};
    cfg.processing_time_profile = {{42.6, 94.1, 117.2},
                                   {7.9, 84.3, 197.9},
                                   {57.8, 96.2, 113.3},
                                   {26.9, 96.9, 109.7},
                                   {57.8, 96.2, 114.3}};
    cfg.high_risk_fraction_range =
        cls == InstanceClass::kSmall ? Interval{0.15, 0.25} : Interval{0.03, 0.05};
    cfg.seed = seed;
    return cfg;
  }

  static std::vector<int> class_sizes(InstanceClass cls) {
    switch (cls) {
      case InstanceClass::kSmall: return {7, 8, 9, 10};
      case InstanceClass::kMedium: return {40};
      case InstanceClass::kLarge: return {200, 300, 400};
    }
    return {};
  }
};

inline std::vector<std::string> validate(const GeneratorConfig& cfg) {
  std::vector<std::string> out;
  auto unit_interval = [&](const Interval& r, const char* name) {
    if (!(r.lo >= 0.0 && r.hi <= 1.0 && r.lo <= r.hi)) {
      out.push_back(std::string(name) + ": must be a sub-interval of [0, 1]");
    }
  };
  if (cfg.n_vehicles < 2) out.push_back("n_vehicles: must be >= 2");
  if (cfg.n_stations < 1) out.push_back("n_stations: must be >= 1");
  if (!(cfg.cycle_time > 0.0)) out.push_back("cycle_time: must be > 0");
  if (static_cast<int>(cfg.station_lengths.size()) != cfg.n_stations) {
    out.push_back("station_lengths: need one entry per station");
  }
  if (static_cast<int>(cfg.processing_time_profile.size()) != cfg.n_stations) {
    out.push_back("processing_time_profile: need one entry per station");
  }
  for (double l : cfg.station_lengths) {
    if (l < cfg.cycle_time) out.push_back("station_lengths: every length must be >= cycle_time");
  }
  for (const TimeProfile& p : cfg.processing_time_profile) {
    if (!(p.min > 0.0 && p.min <= p.mean && p.mean <= p.max)) {
      out.push_back("processing_time_profile: need 0 < min <= mean <= max");
    }
  }
  unit_interval(cfg.ev_ratio_range, "ev_ratio_range");
  unit_interval(cfg.high_risk_fraction_range, "high_risk_fraction_range");
  unit_interval(cfg.low_risk_prob_range, "low_risk_prob_range");
  unit_interval(cfg.high_risk_prob_range, "high_risk_prob_range");
  if (cfg.low_risk_prob_range.hi >= 0.5 || cfg.high_risk_prob_range.hi >= 0.5) {
    out.push_back("failure probability ranges must stay below 0.5");
  }
  return out;
}

// Mode of the triangular law whose mean is `mean`, clamped into [min, max]
// when the target mean is not reachable.
inline double triangular_mode_for_mean(const TimeProfile& p) {
  return std::clamp(3.0 * p.mean - p.min - p.max, p.min, p.max);
}

inline Instance generate(const GeneratorConfig& cfg) {
  if (auto errs = validate(cfg); !errs.empty()) {
    throw InvalidInput("invalid generator config: " + errs.front());
  }
  const int n = cfg.n_vehicles;
  const int ev_lo = static_cast<int>(std::ceil(cfg.ev_ratio_range.lo * n - 1e-9));
  const int ev_hi = static_cast<int>(std::floor(cfg.ev_ratio_range.hi * n + 1e-9));
  if (ev_lo > ev_hi) {
    throw InvalidInput("ev_ratio_range admits no integer EV count for " + std::to_string(n) +
                       " vehicles");
  }

  Rng rng(cfg.seed);
  const int ev_count = static_cast<int>(rng.uniform_int(ev_lo, ev_hi));
  const double high_frac =
      rng.uniform(cfg.high_risk_fraction_range.lo, cfg.high_risk_fraction_range.hi);
  const int high_count = std::clamp(static_cast<int>(std::lround(high_frac * n)), 0, n);

  std::vector<int> ev_order(n);
  std::vector<int> risk_order(n);
  for (int i = 0; i < n; ++i) ev_order[i] = risk_order[i] = i;
  rng.shuffle(ev_order);
  rng.shuffle(risk_order);

  Instance inst;
  inst.cycle_time = Time::from_double(cfg.cycle_time);
  for (int k = 0; k < cfg.n_stations; ++k) {
    inst.stations.push_back({k, Time::from_double(cfg.station_lengths[k])});
  }
  inst.vehicles.resize(n);
  for (int i = 0; i < n; ++i) {
    inst.vehicles[ev_order[i]].is_ev = i < ev_count;
    inst.vehicles[risk_order[i]].risk_class = i < high_count ? RiskClass::kHigh : RiskClass::kLow;
  }
  for (int v = 0; v < n; ++v) {
    Vehicle& veh = inst.vehicles[v];
    veh.id = v;
    const Interval& range = veh.risk_class == RiskClass::kHigh ? cfg.high_risk_prob_range
                                                               : cfg.low_risk_prob_range;
    veh.failure_prob = quantize_probability(rng.uniform(range.lo, range.hi));
    veh.processing_times.resize(cfg.n_stations);
    for (int k = 0; k < cfg.n_stations; ++k) {
      const TimeProfile& prof = cfg.processing_time_profile[k];
      double draw;
      if (k == 0 && veh.is_ev) {
        // Battery station: EVs come from the upper third of the range.
        draw = rng.uniform(prof.min + 2.0 * (prof.max - prof.min) / 3.0, prof.max);
      } else {
        draw = rng.triangular(prof.min, triangular_mode_for_mean(prof), prof.max);
      }
      veh.processing_times[k] = Time::from_double(std::clamp(draw, prof.min, prof.max));
    }
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Text format

inline constexpr const char* kInstanceVersion = "mms-instance/1";

inline std::string serialize(const Instance& inst) {
  std::ostringstream os;
  os << "version: " << kInstanceVersion << "\n";
  os << "cycle_time: " << inst.cycle_time.to_string() << "\n";
  os << "stations:\n";
  for (const Station& s : inst.stations) {
    os << "  - id: " << s.id << "\n";
    os << "    length: " << s.length.to_string() << "\n";
  }
  os << "vehicles:\n";
  for (const Vehicle& v : inst.vehicles) {
    os << "  - id: " << v.id << "\n";
    os << "    is_ev: " << (v.is_ev ? "true" : "false") << "\n";
    os << "    risk_class: " << to_string(v.risk_class) << "\n";
    os << "    failure_prob: " << format_fixed4(v.failure_prob) << "\n";
    os << "    processing_times: [";
    for (std::size_t k = 0; k < v.processing_times.size(); ++k) {
      os << (k ? ", " : "") << v.processing_times[k].to_string();
    }
    os << "]\n";
  }
  return os.str();
}

// Stable 64-bit FNV-1a digest of the canonical serialisation, printed as hex.
inline std::string instance_id(const Instance& inst) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : serialize(inst)) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline std::string node_where(const YAML::Node& node, const std::string& field) {
  const YAML::Mark mark = node.Mark();
  if (mark.line >= 0) return "line " + std::to_string(mark.line + 1) + ", field '" + field + "'";
  return "field '" + field + "'";
}

inline YAML::Node require(const YAML::Node& parent, const std::string& field,
                          const std::string& path) {
  YAML::Node node = parent[field];
  if (!node) {
    throw ParseError("missing required field '" + path + field + "' (" +
                     node_where(parent, path + field) + ")");
  }
  return node;
}

template <typename F>
auto convert_field(const YAML::Node& node, const std::string& field, F&& f) {
  try {
    return f(node.as<std::string>());
  } catch (const YAML::Exception& e) {
    throw ParseError("bad value at " + node_where(node, field) + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError("bad value at " + node_where(node, field) + ": " + e.what());
  }
}

inline int parse_int(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw ParseError("expected an integer, got '" + s + "'");
  }
  if (used != s.size()) throw ParseError("expected an integer, got '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ParseError("expected true/false, got '" + s + "'");
}

inline void warn_unknown(const YAML::Node& map, std::initializer_list<const char*> known,
                         const std::string& path, std::vector<std::string>& warnings) {
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) ==
        known.end()) {
      warnings.push_back("ignoring unknown field '" + path + key + "' (" +
                         node_where(kv.first, path + key) + ")");
    }
  }
}

}  // namespace detail

// Parses an instance document. Unknown fields are skipped and reported in
// `warnings`; missing or malformed fields throw ParseError; a document that
// parses but breaks invariants throws InvalidInput listing the violations.
inline Instance parse_instance(const std::string& text, std::vector<std::string>& warnings) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(std::string("instance file is not well formed: ") + e.what());
  }
  if (!root.IsMap()) throw ParseError("instance file must be a key/value document");
  using namespace detail;
  warn_unknown(root, {"version", "cycle_time", "stations", "vehicles"}, "", warnings);

  const std::string version =
      convert_field(require(root, "version", ""), "version", [](const std::string& s) { return s; });
  if (version != kInstanceVersion) {
    throw ParseError("unsupported version '" + version + "', expected " + kInstanceVersion);
  }
  Instance inst;
  inst.cycle_time = convert_field(require(root, "cycle_time", ""), "cycle_time", Time::parse);

  const YAML::Node stations = require(root, "stations", "");
  if (!stations.IsSequence()) throw ParseError("'stations' must be a list (" + node_where(stations, "stations") + ")");
  for (std::size_t k = 0; k < stations.size(); ++k) {
    const YAML::Node s = stations[k];
    const std::string path = "stations[" + std::to_string(k) + "].";
    if (!s.IsMap()) throw ParseError("'" + path + "' must be a map (" + node_where(s, path) + ")");
    warn_unknown(s, {"id", "length"}, path, warnings);
    Station st;
    st.id = convert_field(require(s, "id", path), path + "id", parse_int);
    st.length = convert_field(require(s, "length", path), path + "length", Time::parse);
    inst.stations.push_back(st);
  }

  const YAML::Node vehicles = require(root, "vehicles", "");
  if (!vehicles.IsSequence()) throw ParseError("'vehicles' must be a list (" + node_where(vehicles, "vehicles") + ")");
  for (std::size_t v = 0; v < vehicles.size(); ++v) {
    const YAML::Node n = vehicles[v];
    const std::string path = "vehicles[" + std::to_string(v) + "].";
    if (!n.IsMap()) throw ParseError("'" + path + "' must be a map (" + node_where(n, path) + ")");
    warn_unknown(n, {"id", "is_ev", "risk_class", "failure_prob", "processing_times"}, path,
                 warnings);
    Vehicle veh;
    veh.id = convert_field(require(n, "id", path), path + "id", parse_int);
    veh.is_ev = convert_field(require(n, "is_ev", path), path + "is_ev", parse_bool);
    veh.risk_class = convert_field(require(n, "risk_class", path), path + "risk_class",
                                   [](const std::string& s) {
                                     if (s == "low") return RiskClass::kLow;
                                     if (s == "high") return RiskClass::kHigh;
                                     throw ParseError("expected low/high, got '" + s + "'");
                                   });
    veh.failure_prob = convert_field(require(n, "failure_prob", path), path + "failure_prob",
                                     parse_probability);
    const YAML::Node times = require(n, "processing_times", path);
    if (!times.IsSequence()) {
      throw ParseError("'" + path + "processing_times' must be a list (" +
                       node_where(times, path + "processing_times") + ")");
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
      veh.processing_times.push_back(convert_field(
          times[k], path + "processing_times[" + std::to_string(k) + "]", Time::parse));
    }
    inst.vehicles.push_back(std::move(veh));
  }

  if (auto errs = validate(inst); !errs.empty()) {
    std::string msg = "instance violates invariants:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw InvalidInput(msg);
  }
  return inst;
}

inline void save(const Instance& inst, const std::filesystem::path& path) {
  if (auto errs = validate(inst); !errs.empty()) {
    throw InvalidInput("refusing to save invalid instance: " + errs.front());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << serialize(inst);
}

inline Instance load(const std::filesystem::path& path, std::vector<std::string>& warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_instance(buf.str(), warnings);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline Instance load(const std::filesystem::path& path) {
  std::vector<std::string> warnings;
  Instance inst = load(path, warnings);
  for (const auto& w : warnings) std::clog << "warning: " << path.string() << ": " << w << "\n";
  return inst;
}

}  // namespace mms
