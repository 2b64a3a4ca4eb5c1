#pragma once

// Priority-rule construction for the one-scenario problem: positions are
// filled left to right, first fixing an EV / non-EV category pattern that
// follows the EV ratio, then choosing within the category by least new work
// overload, least new idle time, and largest utilization weight.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "mms/evaluator.hpp"
#include "mms/instance.hpp"
#include "mms/rng.hpp"
#include "mms/sequence.hpp"

namespace mms {

// Numerator of the utilization weight, sum_k p_kv * sum_{i in unassigned} p_ki,
// in ticks^2. Dividing by |K| * |unassigned| * c gives the weight in TU; the
// denominator is common to all candidates of one step, so comparisons use
// the exact integer numerator.
inline std::int64_t utilization_numerator(const Instance& inst, const std::vector<int>& unassigned,
                                          int v) {
  std::int64_t num = 0;
  for (int k = 0; k < inst.num_stations(); ++k) {
    std::int64_t sum = 0;
    for (int i : unassigned) sum += inst.p(k, i).ticks();
    num += inst.p(k, v).ticks() * sum;
  }
  return num;
}

inline double utilization_weight(const Instance& inst, const std::vector<int>& unassigned, int v) {
  const double num = static_cast<double>(utilization_numerator(inst, unassigned, v));
  const double scale = static_cast<double>(Time::kScale);
  return num / (scale * scale) /
         (static_cast<double>(inst.num_stations()) * static_cast<double>(unassigned.size()) *
          inst.cycle_time.to_double());
}

// EV positions: the first position is an EV, and consecutive EVs are
// floor(total / ev_count) or one more apart, the longer gap drawn with
// probability equal to the fractional part. A longer gap is only drawn while
// the remaining EVs still fit.
inline std::vector<bool> ev_position_pattern(int ev_count, int total, std::uint64_t seed) {
  if (ev_count < 0 || ev_count > total) {
    throw InvalidInput("ev_position_pattern: need 0 <= ev_count <= total");
  }
  std::vector<bool> pattern(total, false);
  if (ev_count == 0) return pattern;
  const int base = total / ev_count;
  const double frac = static_cast<double>(total) / ev_count - base;
  Rng rng(seed);
  int pos = 0;
  pattern[0] = true;
  for (int placed = 1; placed < ev_count; ++placed) {
    int gap = base + (rng.bernoulli(frac) ? 1 : 0);
    const int remaining_after = ev_count - placed - 1;
    if (pos + gap + remaining_after * base > total - 1) gap = base;
    pos += gap;
    pattern[pos] = true;
  }
  return pattern;
}

struct GreedyStep {
  bool ev_category = false;   // category demanded by the pattern
  bool fell_back = false;     // demanded category was exhausted
  int candidates = 0;
  int after_overload = 0;     // |V_t,wo|
  int after_idle = 0;         // |V_t,idle|
  int chosen = -1;
  Time new_overload;
  Time new_idle;
};

struct GreedyTrace {
  std::vector<bool> pattern;
  std::vector<GreedyStep> steps;
};

struct GreedyResult {
  Sequence sequence;
  GreedyTrace trace;
};

inline GreedyResult construct(const Instance& inst, std::uint64_t seed = 0) {
  const int K = inst.num_stations();
  const int T = inst.num_vehicles();
  GreedyResult out;
  out.trace.pattern = ev_position_pattern(inst.ev_count(), T, seed);

  std::vector<int> unassigned(T);
  for (int v = 0; v < T; ++v) unassigned[v] = v;
  std::vector<Time> z(K);

  for (int t = 0; t < T; ++t) {
    GreedyStep step;
    step.ev_category = out.trace.pattern[t];
    std::vector<int> cand;
    for (int v : unassigned) {
      if (inst.vehicles[v].is_ev == step.ev_category) cand.push_back(v);
    }
    if (cand.empty()) {
      step.fell_back = true;
      cand = unassigned;
    }
    step.candidates = static_cast<int>(cand.size());

    const bool last = t + 1 == T;
    auto effect = [&](int v) {
      Time overload;
      Time idle;
      for (int k = 0; k < K; ++k) {
        const Step s = station_step(z[k], inst.p(k, v) - inst.cycle_time,
                                    inst.length(k) - inst.cycle_time, last);
        overload += s.w;
        idle += std::max(kZeroTime, -(z[k] + inst.p(k, v) - inst.cycle_time));
      }
      return std::pair{overload, idle};
    };

    std::vector<std::pair<Time, Time>> eff(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) eff[i] = effect(cand[i]);

    // Stage 1: least new overload (nothing to compare at the first position).
    std::vector<std::size_t> keep(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) keep[i] = i;
    if (t > 0) {
      Time best = eff[keep[0]].first;
      for (std::size_t i : keep) best = std::min(best, eff[i].first);
      std::erase_if(keep, [&](std::size_t i) { return eff[i].first != best; });
    }
    step.after_overload = static_cast<int>(keep.size());

    // Stage 2: least new idle time.
    {
      Time best = eff[keep[0]].second;
      for (std::size_t i : keep) best = std::min(best, eff[i].second);
      std::erase_if(keep, [&](std::size_t i) { return eff[i].second != best; });
    }
    step.after_idle = static_cast<int>(keep.size());

    // Stage 3: largest utilization weight, then lowest id (cand is id-sorted).
    std::size_t pick = keep[0];
    std::int64_t best_num = utilization_numerator(inst, unassigned, cand[pick]);
    for (std::size_t i : keep) {
      const std::int64_t num = utilization_numerator(inst, unassigned, cand[i]);
      if (num > best_num) {
        best_num = num;
        pick = i;
      }
    }

    const int v = cand[pick];
    step.chosen = v;
    step.new_overload = eff[pick].first;
    step.new_idle = eff[pick].second;
    for (int k = 0; k < K; ++k) {
      z[k] = station_step(z[k], inst.p(k, v) - inst.cycle_time, inst.length(k) - inst.cycle_time,
                          false)
                 .z_next;
    }
    std::erase(unassigned, v);
    out.sequence.order.push_back(v);
    out.trace.steps.push_back(step);
  }
  return out;
}

inline void write_greedy_trace(std::ostream& os, const GreedyTrace& trace) {
  os << "position,category,fallback,candidates,after_overload,after_idle,chosen,new_overload,"
        "new_idle\n";
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const GreedyStep& s = trace.steps[t];
    os << t + 1 << "," << (s.ev_category ? "ev" : "non_ev") << "," << (s.fell_back ? 1 : 0) << ","
       << s.candidates << "," << s.after_overload << "," << s.after_idle << "," << s.chosen << ","
       << s.new_overload << "," << s.new_idle << "\n";
  }
}

}  // namespace mms
