#pragma once

// Second-stage evaluation of a sequence under a failure scenario.
//
// Per station, the operator's starting position follows the conditional
// cumulative sum of eta = b - c, clamped to [0, l - c]: the excess above the
// upper clamp is work overload, the shortfall below zero is idle time spent
// waiting for the next workpiece. Failed vehicles are turned into neutral
// vehicles (b = c at every station), which leaves the trajectory unchanged
// and is equivalent to removing them from the sequence.

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mms/error.hpp"
#include "mms/fixed_point.hpp"
#include "mms/instance.hpp"
#include "mms/parallel.hpp"
#include "mms/scenario.hpp"
#include "mms/sequence.hpp"

namespace mms {

enum class ScenarioTransform {
  kRemoval,          // failed positions deleted, successors close the gap
  kStandardZero,     // failed vehicles get b = 0 (needs the beta constraints in an LP)
  kImprovedNeutral,  // failed vehicles get b = c
};

// b[k][t]: processing time seen at station k, position t.
inline std::vector<std::vector<Time>> effective_times(const Instance& inst, const Sequence& seq,
                                                      const Scenario& sc,
                                                      ScenarioTransform transform) {
  const int K = inst.num_stations();
  std::vector<std::vector<Time>> b(K);
  for (int k = 0; k < K; ++k) {
    b[k].reserve(seq.order.size());
    for (int v : seq.order) {
      if (sc.exists[v]) {
        b[k].push_back(inst.p(k, v));
      } else if (transform == ScenarioTransform::kStandardZero) {
        b[k].push_back(kZeroTime);
      } else if (transform == ScenarioTransform::kImprovedNeutral) {
        b[k].push_back(inst.cycle_time);
      }
    }
  }
  return b;
}

struct StationResult {
  std::vector<Time> z;     // starting position at each position
  std::vector<Time> w;     // work overload at each position
  std::vector<Time> idle;  // waiting time before the workpiece at each position
  Time total;
};

// One step of the recursion. `last_regenerative` applies the end-of-horizon
// condition z_{T+1} = 0, under which everything above the left border is
// overload.
struct Step {
  Time w;
  Time idle_next;
  Time z_next;
};

inline Step station_step(Time z, Time eta, Time l_minus_c, bool last_regenerative) {
  const Time s = z + eta;
  if (last_regenerative) return {std::max(kZeroTime, s), kZeroTime, kZeroTime};
  return {std::max(kZeroTime, s - l_minus_c), std::max(kZeroTime, -s),
          std::clamp(s, kZeroTime, l_minus_c)};
}

inline StationResult evaluate_station(std::span<const Time> b, Time c, Time l, bool regenerative) {
  const std::size_t T = b.size();
  StationResult r;
  r.z.assign(T, kZeroTime);
  r.w.assign(T, kZeroTime);
  r.idle.assign(T, kZeroTime);
  const Time lc = l - c;
  Time z = kZeroTime;
  for (std::size_t t = 0; t < T; ++t) {
    r.z[t] = z;
    const Step st = station_step(z, b[t] - c, lc, regenerative && t + 1 == T);
    r.w[t] = st.w;
    r.total += st.w;
    if (t + 1 < T) r.idle[t + 1] = st.idle_next;
    z = st.z_next;
  }
  return r;
}

// Cached per-station trajectories of one sequence under one scenario.
// Arrays are station-major: index k * T + t.
struct EvalState {
  int num_stations = 0;
  int num_positions = 0;
  bool regenerative = true;
  std::vector<bool> exists;  // scenario, by vehicle
  std::uint64_t sequence_hash = 0;
  std::vector<Time> eta;
  std::vector<Time> z;
  std::vector<Time> w;
  std::vector<Time> idle;
  Time total_overload;

  std::size_t at(int k, int t) const { return static_cast<std::size_t>(k) * num_positions + t; }

  bool operator==(const EvalState&) const = default;
};

namespace detail {

inline Time neutral_eta(const Instance& inst, const std::vector<bool>& exists, int k, int v) {
  return exists[v] ? inst.p(k, v) - inst.cycle_time : kZeroTime;
}

inline void fill_state(EvalState& st, const Instance& inst, const Sequence& seq) {
  const int K = st.num_stations;
  const int T = st.num_positions;
  st.total_overload = kZeroTime;
  for (int k = 0; k < K; ++k) {
    const Time lc = inst.length(k) - inst.cycle_time;
    Time z = kZeroTime;
    st.idle[st.at(k, 0)] = kZeroTime;
    for (int t = 0; t < T; ++t) {
      const std::size_t i = st.at(k, t);
      st.eta[i] = neutral_eta(inst, st.exists, k, seq.order[t]);
      st.z[i] = z;
      const Step s = station_step(z, st.eta[i], lc, st.regenerative && t + 1 == T);
      st.w[i] = s.w;
      st.total_overload += s.w;
      if (t + 1 < T) st.idle[i + 1] = s.idle_next;
      z = s.z_next;
    }
  }
}

}  // namespace detail

inline EvalState evaluate(const Instance& inst, const Sequence& seq, const Scenario& sc,
                          bool regenerative = true) {
  EvalState st;
  st.num_stations = inst.num_stations();
  st.num_positions = seq.size();
  st.regenerative = regenerative;
  st.exists = sc.exists;
  st.sequence_hash = seq.hash();
  const std::size_t n = static_cast<std::size_t>(st.num_stations) * st.num_positions;
  st.eta.assign(n, kZeroTime);
  st.z.assign(n, kZeroTime);
  st.w.assign(n, kZeroTime);
  st.idle.assign(n, kZeroTime);
  detail::fill_state(st, inst, seq);
  return st;
}

// Total overload only, without materialising the trajectories.
inline Time total_overload(const Instance& inst, const Sequence& seq, const Scenario& sc,
                           bool regenerative = true) {
  const int K = inst.num_stations();
  const int T = seq.size();
  Time total;
  for (int k = 0; k < K; ++k) {
    const Time lc = inst.length(k) - inst.cycle_time;
    Time z;
    for (int t = 0; t < T; ++t) {
      const Time eta = detail::neutral_eta(inst, sc.exists, k, seq.order[t]);
      const Step s = station_step(z, eta, lc, regenerative && t + 1 == T);
      total += s.w;
      z = s.z_next;
    }
  }
  return total;
}

inline double evaluate_expected(const Instance& inst, const Sequence& seq, const ScenarioSet& set,
                                bool regenerative = true, unsigned workers = 1) {
  std::vector<Time> totals(set.size());
  parallel_for(set.size(), workers, [&](std::size_t i) {
    totals[i] = total_overload(inst, seq, set.scenario(i), regenerative);
  });
  return set.combine(totals);
}

// (1/N) * sum over unique scenarios of n_w * Q(x, w).
inline double evaluate_expected(const Instance& inst, const Sequence& seq, const Sample& sample,
                                bool regenerative = true, unsigned workers = 1) {
  return evaluate_expected(inst, seq, ScenarioSet::from_sample(sample), regenerative, workers);
}

// ---------------------------------------------------------------------------
// Partial reevaluation

// Records overwritten cells so a tentative move can be rolled back.
class UndoLog {
 public:
  void record(Time* cell) { entries_.emplace_back(cell, *cell); }
  void rollback() {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) *it->first = it->second;
    entries_.clear();
  }
  void clear() { entries_.clear(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<std::pair<Time*, Time>> entries_;
};

struct PartialResult {
  Time delta;                         // new total - old total
  std::int64_t recomputed_steps = 0;  // (station, position) recursion steps executed
};

namespace detail {

inline void write(Time& cell, Time value, UndoLog* undo) {
  if (cell == value) return;
  if (undo) undo->record(&cell);
  cell = value;
}

}  // namespace detail

// Updates `st` (exact for the sequence before the move) in place so that it
// is exact for `new_seq` = apply(old, move). Recomputation starts at the
// first position whose eta changed and stops once the recomputed starting
// position equals the cached one with no changed eta further downstream:
// the recursion only depends on z, so the cached suffix is then still valid.
inline PartialResult partial_update(EvalState& st, const Instance& inst, const Sequence& new_seq,
                                    const Move& move, UndoLog* undo = nullptr) {
  const int K = st.num_stations;
  const int T = st.num_positions;
  PartialResult result;

  // Positions whose vehicle may differ after the move.
  thread_local std::vector<int> touched;
  touched.clear();
  if (move.kind == MoveKind::kSwap) {
    touched = {move.t1, move.t2};
  } else {
    for (int t = move.t1; t <= move.t2; ++t) touched.push_back(t);
  }
  thread_local std::vector<Time> old_eta;
  thread_local std::vector<unsigned char> differs;

  Time delta;
  for (int k = 0; k < K; ++k) {
    const Time lc = inst.length(k) - inst.cycle_time;
    differs.assign(touched.size(), 0);
    old_eta.resize(touched.size());
    bool any = false;
    for (std::size_t j = 0; j < touched.size(); ++j) {
      const int t = touched[j];
      Time& cell = st.eta[st.at(k, t)];
      old_eta[j] = cell;
      const Time fresh = detail::neutral_eta(inst, st.exists, k, new_seq.order[t]);
      if (fresh != cell) {
        differs[j] = 1;
        any = true;
        detail::write(cell, fresh, undo);
      }
    }
    if (!any) continue;

    // Index into `touched` of the next differing position at or after t.
    std::size_t cursor = 0;
    auto next_diff = [&](int from) -> int {
      while (cursor < touched.size() && (touched[cursor] < from || !differs[cursor])) ++cursor;
      return cursor < touched.size() ? touched[cursor] : -1;
    };

    int t = next_diff(0);
    Time z = st.z[st.at(k, t)];
    while (true) {
      const std::size_t i = st.at(k, t);
      const bool last = t + 1 == T;
      const Step s = station_step(z, st.eta[i], lc, st.regenerative && last);
      ++result.recomputed_steps;
      delta += s.w - st.w[i];
      detail::write(st.w[i], s.w, undo);
      if (last) break;
      detail::write(st.idle[i + 1], s.idle_next, undo);
      if (s.z_next == st.z[i + 1]) {
        t = next_diff(t + 1);
        if (t < 0) break;
        z = st.z[st.at(k, t)];
        continue;
      }
      detail::write(st.z[i + 1], s.z_next, undo);
      z = s.z_next;
      ++t;
    }
  }
  if (delta != kZeroTime) {
    if (undo) undo->record(&st.total_overload);
    st.total_overload += delta;
  }
  result.delta = delta;
  return result;
}

// Value-returning form with a stale-state check: `state` must have been
// computed for `old_seq`.
inline std::pair<EvalState, Time> partial_reevaluate(const EvalState& state, const Instance& inst,
                                                     const Sequence& old_seq, const Move& move) {
  if (old_seq.size() != state.num_positions || old_seq.hash() != state.sequence_hash) {
    throw ContractViolation("partial_reevaluate: state does not belong to the given sequence");
  }
  EvalState next = state;
  const Sequence new_seq = apply(old_seq, move);
  const PartialResult r = partial_update(next, inst, new_seq, move);
  next.sequence_hash = new_seq.hash();
  return {std::move(next), r.delta};
}

// Keeps one EvalState per scenario of a weighted set and supports tentative
// moves with rollback. Scenario updates may fan out over workers; the
// objective is always reduced in scenario order.
class SampleEvaluator {
 public:
  SampleEvaluator(const Instance& inst, const ScenarioSet& set, bool regenerative = true,
                  unsigned workers = 1)
      : inst_(&inst), set_(&set), regenerative_(regenerative), workers_(workers) {}

  void reset(const Sequence& seq) {
    states_.resize(set_->size());
    undo_.assign(set_->size(), UndoLog{});
    totals_.resize(set_->size());
    parallel_for(set_->size(), workers_, [&](std::size_t i) {
      states_[i] = evaluate(*inst_, seq, set_->scenario(i), regenerative_);
      totals_[i] = states_[i].total_overload;
    });
    objective_ = set_->combine(totals_);
    hash_ = seq.hash();
  }

  double objective() const { return objective_; }

  // Applies the move tentatively; returns the objective of `new_seq`. Must
  // be followed by commit() or rollback().
  double try_move(const Sequence& new_seq, const Move& move) {
    steps_.assign(set_->size(), 0);
    pending_totals_.resize(set_->size());
    const std::uint64_t hash = new_seq.hash();
    parallel_for(set_->size(), workers_, [&](std::size_t i) {
      const PartialResult r = partial_update(states_[i], *inst_, new_seq, move, &undo_[i]);
      steps_[i] = r.recomputed_steps;
      pending_totals_[i] = states_[i].total_overload;
      states_[i].sequence_hash = hash;
    });
    for (std::size_t i = 0; i < set_->size(); ++i) recomputed_steps_ += steps_[i];
    pending_objective_ = set_->combine(pending_totals_);
    return pending_objective_;
  }

  void commit() {
    for (auto& u : undo_) u.clear();
    totals_ = pending_totals_;
    objective_ = pending_objective_;
    hash_ = states_.empty() ? hash_ : states_.front().sequence_hash;
  }

  void rollback() {
    for (auto& u : undo_) u.rollback();
    for (auto& st : states_) st.sequence_hash = hash_;
  }

  const EvalState& state(std::size_t i) const { return states_[i]; }
  std::size_t size() const { return states_.size(); }
  std::int64_t recomputed_steps() const { return recomputed_steps_; }

 private:
  const Instance* inst_;
  const ScenarioSet* set_;
  bool regenerative_;
  unsigned workers_;
  std::vector<EvalState> states_;
  std::vector<UndoLog> undo_;
  std::vector<Time> totals_;
  std::vector<Time> pending_totals_;
  std::vector<std::int64_t> steps_;
  std::uint64_t hash_ = 0;
  double objective_ = 0.0;
  double pending_objective_ = 0.0;
  std::int64_t recomputed_steps_ = 0;
};

// CSV trace: station, position, vehicle, b, z, w, idle (positions 1-based).
inline void write_trace(std::ostream& os, const EvalState& st, const Instance& inst,
                        const Sequence& seq) {
  os << "station,position,vehicle,b,z,w,idle\n";
  for (int k = 0; k < st.num_stations; ++k) {
    for (int t = 0; t < st.num_positions; ++t) {
      const std::size_t i = st.at(k, t);
      os << k + 1 << "," << t + 1 << "," << seq.order[t] << ","
         << (st.eta[i] + inst.cycle_time).to_string() << "," << st.z[i].to_string() << ","
         << st.w[i].to_string() << "," << st.idle[i].to_string() << "\n";
    }
  }
}

}  // namespace mms
