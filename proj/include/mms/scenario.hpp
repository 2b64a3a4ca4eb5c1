#pragma once

// Failure scenarios, i.i.d. samples with deduplicated counts, and the
// weighted scenario sets consumed by the evaluators and solvers.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mms/error.hpp"
#include "mms/fixed_point.hpp"
#include "mms/instance.hpp"
#include "mms/rng.hpp"

namespace mms {

// exists[v] is false when vehicle v is pulled from the sequence.
struct Scenario {
  std::vector<bool> exists;

  static Scenario all_exist(int n_vehicles) { return {std::vector<bool>(n_vehicles, true)}; }

  int size() const { return static_cast<int>(exists.size()); }
  int failures() const {
    int n = 0;
    for (bool e : exists) n += e ? 0 : 1;
    return n;
  }

  // '1' = exists, '0' = failed; one character per vehicle.
  std::string bits() const {
    std::string s;
    s.reserve(exists.size());
    for (bool e : exists) s.push_back(e ? '1' : '0');
    return s;
  }
  static Scenario from_bits(const std::string& bits) {
    Scenario s;
    for (char ch : bits) {
      if (ch != '0' && ch != '1') throw ParseError("scenario bitstring must use 0/1: '" + bits + "'");
      s.exists.push_back(ch == '1');
    }
    return s;
  }

  bool operator==(const Scenario&) const = default;
  bool operator<(const Scenario& o) const { return exists < o.exists; }
};

struct Sample {
  std::uint64_t seed = 0;
  std::vector<Scenario> scenarios;                     // the drawn multiset, draw order
  std::vector<std::pair<Scenario, std::int64_t>> unique;  // sorted, with counts

  std::int64_t size() const { return static_cast<std::int64_t>(scenarios.size()); }

  static Sample from_scenarios(std::vector<Scenario> drawn, std::uint64_t seed) {
    Sample s;
    s.seed = seed;
    std::map<Scenario, std::int64_t> counts;
    for (const Scenario& sc : drawn) ++counts[sc];
    s.unique.assign(counts.begin(), counts.end());
    s.scenarios = std::move(drawn);
    return s;
  }

  // The one-scenario problem: only the no-failure realisation.
  static Sample nominal(int n_vehicles) {
    return from_scenarios({Scenario::all_exist(n_vehicles)}, 0);
  }
};

inline double scenario_probability(const Instance& inst, const Scenario& sc) {
  if (sc.size() != inst.num_vehicles()) {
    throw InvalidInput("scenario has " + std::to_string(sc.size()) + " entries, instance has " +
                       std::to_string(inst.num_vehicles()) + " vehicles");
  }
  double rho = 1.0;
  for (int v = 0; v < sc.size(); ++v) {
    const double f = inst.vehicles[v].failure_prob;
    rho *= sc.exists[v] ? 1.0 - f : f;
  }
  return rho;
}

// Independent per-vehicle coin flips against the fixed f_v. With
// `forbid_low_risk_failures`, low-risk vehicles always exist.
inline Sample sample(const Instance& inst, std::int64_t n, std::uint64_t seed,
                     bool forbid_low_risk_failures = false) {
  if (n < 1) throw InvalidInput("sample size must be >= 1");
  Rng rng(seed);
  std::vector<Scenario> drawn;
  drawn.reserve(static_cast<std::size_t>(n));
  const int nv = inst.num_vehicles();
  for (std::int64_t i = 0; i < n; ++i) {
    Scenario sc = Scenario::all_exist(nv);
    for (int v = 0; v < nv; ++v) {
      const Vehicle& veh = inst.vehicles[v];
      const double u = rng.uniform();
      if (forbid_low_risk_failures && veh.risk_class == RiskClass::kLow) continue;
      if (u < veh.failure_prob) sc.exists[v] = false;
    }
    drawn.push_back(std::move(sc));
  }
  return Sample::from_scenarios(std::move(drawn), seed);
}

inline constexpr int kMaxEnumeratedVehicles = 20;

// All 2^|V| scenarios in lexicographic order with their probabilities.
inline std::vector<std::pair<Scenario, double>> enumerate_all(const Instance& inst) {
  const int nv = inst.num_vehicles();
  if (nv > kMaxEnumeratedVehicles) {
    throw GuardViolation("refusing to enumerate 2^" + std::to_string(nv) +
                         " scenarios (limit is " + std::to_string(kMaxEnumeratedVehicles) +
                         " vehicles)");
  }
  std::vector<std::pair<Scenario, double>> out;
  out.reserve(std::size_t{1} << nv);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << nv); ++mask) {
    Scenario sc = Scenario::all_exist(nv);
    for (int v = 0; v < nv; ++v) sc.exists[v] = (mask >> (nv - 1 - v)) & 1U;
    const double rho = scenario_probability(inst, sc);
    out.emplace_back(std::move(sc), rho);
  }
  return out;
}

// Weighted scenario collection. Sample-backed sets keep integer counts so the
// expectation is a single exact division of an integer tick sum.
class ScenarioSet {
 public:
  static ScenarioSet from_sample(const Sample& s) {
    ScenarioSet set;
    set.denominator_ = s.size();
    for (const auto& [sc, count] : s.unique) {
      set.scenarios_.push_back(sc);
      set.counts_.push_back(count);
      set.weights_.push_back(static_cast<double>(count) / static_cast<double>(s.size()));
    }
    return set;
  }

  static ScenarioSet from_probabilities(const std::vector<std::pair<Scenario, double>>& items) {
    ScenarioSet set;
    for (const auto& [sc, w] : items) {
      set.scenarios_.push_back(sc);
      set.weights_.push_back(w);
    }
    return set;
  }

  static ScenarioSet single(Scenario sc) {
    ScenarioSet set;
    set.scenarios_.push_back(std::move(sc));
    set.counts_.push_back(1);
    set.weights_.push_back(1.0);
    set.denominator_ = 1;
    return set;
  }

  std::size_t size() const { return scenarios_.size(); }
  const Scenario& scenario(std::size_t i) const { return scenarios_[i]; }
  const std::vector<Scenario>& scenarios() const { return scenarios_; }
  double weight(std::size_t i) const { return weights_[i]; }
  bool has_counts() const { return !counts_.empty(); }

  // Expected overload in TU from per-scenario totals, reduced in set order.
  double combine(std::span<const Time> totals) const {
    if (has_counts()) {
      std::int64_t num = 0;
      for (std::size_t i = 0; i < totals.size(); ++i) num += counts_[i] * totals[i].ticks();
      return static_cast<double>(num) / static_cast<double>(denominator_ * Time::kScale);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < totals.size(); ++i) acc += weights_[i] * totals[i].to_double();
    return acc;
  }

 private:
  std::vector<Scenario> scenarios_;
  std::vector<std::int64_t> counts_;
  std::vector<double> weights_;
  std::int64_t denominator_ = 1;
};

// ---------------------------------------------------------------------------
// "mms-sample/1" text format: seed, N, vehicle count, then one
// "<bitstring> <count>" line per unique scenario.

inline std::string serialize(const Sample& s) {
  std::ostringstream os;
  os << "version: mms-sample/1\n";
  os << "seed: " << s.seed << "\n";
  os << "n: " << s.size() << "\n";
  os << "vehicles: " << (s.unique.empty() ? 0 : s.unique.front().first.size()) << "\n";
  os << "unique: " << s.unique.size() << "\n";
  for (const auto& [sc, count] : s.unique) os << sc.bits() << " " << count << "\n";
  return os.str();
}

inline Sample parse_sample(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto header = [&](const std::string& key) {
    if (!std::getline(in, line) || line.rfind(key + ": ", 0) != 0) {
      throw ParseError("sample file: expected '" + key + ":' line");
    }
    return line.substr(key.size() + 2);
  };
  if (header("version") != "mms-sample/1") throw ParseError("sample file: unsupported version");
  const std::uint64_t seed = std::stoull(header("seed"));
  const std::int64_t n = std::stoll(header("n"));
  const std::size_t nv = std::stoul(header("vehicles"));
  const std::size_t nu = std::stoul(header("unique"));
  std::vector<Scenario> drawn;
  for (std::size_t i = 0; i < nu; ++i) {
    std::string bits;
    std::int64_t count = 0;
    if (!std::getline(in, line)) throw ParseError("sample file: truncated scenario list");
    std::istringstream row(line);
    if (!(row >> bits >> count) || count < 1 || bits.size() != nv) {
      throw ParseError("sample file: bad scenario line " + std::to_string(i + 6));
    }
    const Scenario sc = Scenario::from_bits(bits);
    for (std::int64_t c = 0; c < count; ++c) drawn.push_back(sc);
  }
  if (static_cast<std::int64_t>(drawn.size()) != n) {
    throw ParseError("sample file: counts do not sum to n");
  }
  return Sample::from_scenarios(std::move(drawn), seed);
}

}  // namespace mms
