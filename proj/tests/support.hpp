#pragma once

// Fixtures shared by the unit tests and the acceptance binary.

#include <cstdint>
#include <string>
#include <vector>

#include "mms/mms.hpp"

#ifndef MMS_TEST_DATA
#define MMS_TEST_DATA "tests/data"
#endif

namespace mms::testing {

inline std::string data_path(const std::string& name) { return std::string(MMS_TEST_DATA) + "/" + name; }

// Six vehicles A..F (ids 0..5) on two stations, c = 7, l = (20, 10).
inline Instance greedy_example() { return load(data_path("greedy_example.yaml")); }

// One station with c = 7, l = 10 and the given vehicle times, in id order.
inline Instance single_station(const std::vector<int>& times, std::int64_t c = 7, std::int64_t l = 10) {
  Instance inst;
  inst.cycle_time = Time::from_units(c);
  inst.stations = {{0, Time::from_units(l)}};
  for (std::size_t v = 0; v < times.size(); ++v) {
    Vehicle veh;
    veh.id = static_cast<int>(v);
    veh.processing_times = {Time::from_units(times[v])};
    inst.vehicles.push_back(veh);
  }
  return inst;
}

inline std::vector<Time> units(const std::vector<int>& v) {
  std::vector<Time> out;
  for (int x : v) out.push_back(Time::from_units(x));
  return out;
}

// Small-class instance with n vehicles.
inline Instance small_instance(int n, std::uint64_t seed) {
  return generate(GeneratorConfig::preset(InstanceClass::kSmall, n, seed));
}

// Sizes up to 8 for which the class's EV ratio range admits an EV count.
inline int random_small_size(Rng& rng) {
  static const int sizes[] = {3, 4, 6, 7, 8};
  return sizes[rng.uniform_index(5)];
}

inline Sequence random_sequence(int n, Rng& rng) {
  Sequence s = Sequence::identity(n);
  for (int i = n - 1; i > 0; --i) {
    std::swap(s.order[i], s.order[rng.uniform_index(static_cast<std::uint64_t>(i) + 1)]);
  }
  return s;
}

inline Scenario random_scenario(int n, double fail, Rng& rng) {
  Scenario sc = Scenario::all_exist(n);
  for (int v = 0; v < n; ++v) sc.exists[v] = rng.uniform() >= fail;
  return sc;
}

inline Move random_move(int T, Rng& rng) {
  const auto kind = static_cast<MoveKind>(rng.uniform_index(4));
  int a = static_cast<int>(rng.uniform_index(T));
  int b = static_cast<int>(rng.uniform_index(T - 1));
  if (b >= a) ++b;
  return {kind, std::min(a, b), std::max(a, b)};
}

// Overload of the removal sequence: failed vehicles deleted outright.
inline Time removal_total(const Instance& inst, const Sequence& seq, const Scenario& sc, bool regen = true) {
  const auto b = effective_times(inst, seq, sc, ScenarioTransform::kRemoval);
  Time total;
  for (int k = 0; k < inst.num_stations(); ++k) {
    total += evaluate_station(b[k], inst.cycle_time, inst.length(k), regen).total;
  }
  return total;
}

}  // namespace mms::testing
