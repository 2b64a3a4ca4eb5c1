#pragma once

// Two-phase local search over permutations. Phase 1 improves the start on
// the no-failure scenario alone; phase 2 continues on the sampled scenarios.
// Each iteration draws an operator by weight and a random non-tabu move, and
// keeps the neighbour unless it has strictly more expected overload. The
// tabu rules forbid moves that would put two EVs back to back.
//
// The simulated-annealing baseline runs the same loop without tabu rules and
// with Metropolis acceptance.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mms/evaluator.hpp"
#include "mms/instance.hpp"
#include "mms/rng.hpp"
#include "mms/scenario.hpp"
#include "mms/sequence.hpp"

namespace mms {

namespace detail {

inline bool is_ev_at(const Instance& inst, const Sequence& seq, int t) {
  return t >= 0 && t < seq.size() && inst.vehicles[seq.order[t]].is_ev;
}

}  // namespace detail

// Rules are split by whether the vehicle that changes neighbours is an EV.
// For insertions that is the moved vehicle (at t1 for forward, t2 for
// backward); positions outside the sequence count as non-EV. Starting from a
// sequence without adjacent EVs, a non-tabu move never creates a pair.
inline bool is_tabu(const Instance& inst, const Sequence& seq, const Move& m) {
  auto ev = [&](int t) { return detail::is_ev_at(inst, seq, t); };
  const int t1 = m.t1;
  const int t2 = m.t2;
  switch (m.kind) {
    case MoveKind::kSwap:
      if (ev(t1)) return ev(t2 - 1) || ev(t2 + 1);
      return ev(t2) && (ev(t1 - 1) || ev(t1 + 1));
    case MoveKind::kInsertForward:
      // The moved vehicle lands between the old t2 and t2 + 1.
      if (ev(t1)) return ev(t2) || ev(t2 + 1);
      return ev(t1 - 1) && ev(t1 + 1);
    case MoveKind::kInsertBackward:
      // The moved vehicle lands between the old t1 - 1 and t1.
      if (ev(t2)) return ev(t1) || ev(t1 - 1);
      return ev(t2 - 1) && ev(t2 + 1);
    case MoveKind::kInversion:
      if (ev(t1)) return ev(t2 + 1);
      return ev(t1 - 1) && ev(t2);
  }
  return false;
}

inline bool has_adjacent_evs(const Instance& inst, const Sequence& seq) {
  for (int t = 0; t + 1 < seq.size(); ++t) {
    if (detail::is_ev_at(inst, seq, t) && detail::is_ev_at(inst, seq, t + 1)) return true;
  }
  return false;
}

struct SearchParams {
  // swap, forward insertion, backward insertion, inversion
  std::array<double, 4> operator_weights{0.45, 0.10, 0.15, 0.30};
  double tau_one = 10.0;   // seconds
  double tau_full = 590.0;
  // Iteration budgets; when >= 0 they replace the matching time budget.
  std::int64_t iters_one = -1;
  std::int64_t iters_full = -1;
  std::uint64_t seed = 0;
  bool regenerative = true;
  unsigned workers = 1;
  // Every k-th iteration, compare the incremental objective with a full
  // evaluation and throw on mismatch. 0 disables the check.
  std::int64_t check_every = 0;
  // History keeps every improvement of the best plus every k-th iteration.
  std::int64_t history_every = 100;
  bool record_time = true;
};

struct SAParams {
  double t_init = 10.0;
  double alpha = 0.999;
  std::uint64_t seed = 0;
};

inline std::vector<std::string> validate(const SearchParams& p) {
  std::vector<std::string> out;
  double sum = 0.0;
  for (double w : p.operator_weights) {
    if (w < 0.0) out.push_back("operator_weights: must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) out.push_back("operator_weights: must sum to 1");
  if (p.tau_one < 0.0 || p.tau_full < 0.0) out.push_back("tau_one/tau_full: must be >= 0");
  return out;
}

struct HistoryRow {
  std::int64_t iteration = 0;
  double elapsed = 0.0;
  int phase = 1;
  std::string op;
  bool accepted = false;
  double objective = 0.0;  // incumbent objective after the iteration
};

struct SearchResult {
  Sequence best;
  double objective = 0.0;         // best, under the phase-2 measure
  double start_objective = 0.0;   // start, under the phase-2 measure
  double phase1_objective = 0.0;  // phase-1 best, under the one-scenario measure
  std::int64_t iterations = 0;
  std::int64_t accepted = 0;
  std::int64_t recomputed_steps = 0;
  std::vector<HistoryRow> history;
};

namespace detail {

// Accepts (delta, rng) and decides whether the neighbour replaces the
// incumbent; `begin_phase` lets the acceptor reset per-phase state.
struct Acceptor {
  std::function<void()> begin_phase;
  std::function<bool(double, Rng&)> accept;
  bool use_tabu = true;
};

inline std::optional<Move> draw_move(const Instance& inst, const Sequence& seq,
                                     const std::array<double, 4>& weights, bool use_tabu,
                                     Rng& rng) {
  const int T = seq.size();
  if (T < 2) return std::nullopt;
  for (int op_draw = 0; op_draw < 100; ++op_draw) {
    const auto kind = static_cast<MoveKind>(rng.discrete(weights));
    for (int attempt = 0; attempt < 100; ++attempt) {
      int a = static_cast<int>(rng.uniform_index(T));
      int b = static_cast<int>(rng.uniform_index(T - 1));
      if (b >= a) ++b;
      const Move m{kind, std::min(a, b), std::max(a, b)};
      if (!use_tabu || !is_tabu(inst, seq, m)) return m;
    }
  }
  return std::nullopt;
}

class Budget {
 public:
  Budget(std::int64_t iters, double seconds) : iters_(iters), seconds_(seconds) {
    start_ = std::chrono::steady_clock::now();
  }
  bool exhausted(std::int64_t done) const {
    if (iters_ >= 0) return done >= iters_;
    return seconds_ <= 0.0 || elapsed() >= seconds_;
  }
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::int64_t iters_;
  double seconds_;
  std::chrono::steady_clock::time_point start_;
};

inline SearchResult run_local_search(const Instance& inst, const ScenarioSet& set,
                                     const Sequence& start, const SearchParams& params,
                                     Acceptor acceptor) {
  if (!start.is_permutation_of(inst.num_vehicles())) {
    throw InvalidInput("search: start is not a permutation of the instance's vehicles");
  }
  if (auto v = validate(params); !v.empty()) throw InvalidInput("search params: " + v.front());

  SearchResult res;
  const auto t0 = std::chrono::steady_clock::now();
  auto now = [&] {
    return params.record_time
               ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
               : 0.0;
  };

  const ScenarioSet nominal = ScenarioSet::single(Scenario::all_exist(inst.num_vehicles()));
  Sequence incumbent = start;
  Sequence best = start;
  std::int64_t iteration = 0;

  for (int phase = 1; phase <= 2; ++phase) {
    const ScenarioSet& measure = phase == 1 ? nominal : set;
    SampleEvaluator eval(inst, measure, params.regenerative, params.workers);
    eval.reset(incumbent);
    double current = eval.objective();
    double best_value = current;
    best = incumbent;
    if (phase == 2) {
      // The start may be better on the sample than the phase-1 result.
      res.start_objective = evaluate_expected(inst, start, set, params.regenerative, params.workers);
      if (res.start_objective < best_value) {
        best = start;
        best_value = res.start_objective;
      }
    }
    if (acceptor.begin_phase) acceptor.begin_phase();
    res.history.push_back({iteration, now(), phase, "start", true, current});

    Rng rng = Rng(params.seed).split(static_cast<std::uint64_t>(phase));
    Budget budget(phase == 1 ? params.iters_one : params.iters_full,
                  phase == 1 ? params.tau_one : params.tau_full);
    std::int64_t done = 0;
    while (!budget.exhausted(done)) {
      ++done;
      ++iteration;
      const std::optional<Move> move =
          draw_move(inst, incumbent, params.operator_weights, acceptor.use_tabu, rng);
      bool accepted = false;
      if (move) {
        Sequence next = apply(incumbent, *move);
        const double value = eval.try_move(next, *move);
        if (params.check_every > 0 && done % params.check_every == 0) {
          const double full = evaluate_expected(inst, next, measure, params.regenerative);
          if (full != value) {
            throw ContractViolation("incremental objective " + std::to_string(value) +
                                    " differs from full evaluation " + std::to_string(full));
          }
        }
        accepted = acceptor.accept(value - current, rng);
        if (accepted) {
          eval.commit();
          incumbent = std::move(next);
          current = value;
          ++res.accepted;
        } else {
          eval.rollback();
        }
      }
      const bool improved = accepted && current < best_value;
      if (improved) {
        best = incumbent;
        best_value = current;
      }
      if (improved || (params.history_every > 0 && done % params.history_every == 0)) {
        res.history.push_back({iteration, now(), phase, move ? to_string(move->kind) : "none",
                               accepted, current});
      }
    }
    res.recomputed_steps += eval.recomputed_steps();
    if (phase == 1) {
      res.phase1_objective = best_value;
      incumbent = best;
    } else {
      res.objective = best_value;
    }
  }
  res.best = best;
  res.iterations = iteration;
  return res;
}

}  // namespace detail

inline SearchResult search(const Instance& inst, const ScenarioSet& set, const Sequence& start,
                           const SearchParams& params) {
  detail::Acceptor acc;
  acc.accept = [](double delta, Rng&) { return delta <= 0.0; };
  return detail::run_local_search(inst, set, start, params, std::move(acc));
}

inline SearchResult search(const Instance& inst, const Sample& sample, const Sequence& start,
                           const SearchParams& params) {
  return search(inst, ScenarioSet::from_sample(sample), start, params);
}

// Budgets and operator weights come from `params`; the temperature restarts
// at t_init in each phase and is multiplied by alpha after every iteration.
inline SearchResult simulated_annealing(const Instance& inst, const ScenarioSet& set,
                                        const Sequence& start, const SAParams& sa,
                                        SearchParams params) {
  if (!(sa.t_init > 0.0) || !(sa.alpha > 0.0 && sa.alpha < 1.0)) {
    throw InvalidInput("SA params: need t_init > 0 and 0 < alpha < 1");
  }
  params.seed = sa.seed;
  auto temperature = std::make_shared<double>(sa.t_init);
  detail::Acceptor acc;
  acc.use_tabu = false;
  acc.begin_phase = [temperature, sa] { *temperature = sa.t_init; };
  acc.accept = [temperature, sa](double delta, Rng& rng) {
    const double t = *temperature;
    *temperature *= sa.alpha;
    if (delta <= 0.0) return true;
    return rng.uniform() < std::exp(-delta / t);
  };
  return detail::run_local_search(inst, set, start, params, std::move(acc));
}

inline SearchResult simulated_annealing(const Instance& inst, const Sample& sample,
                                        const Sequence& start, const SAParams& sa,
                                        const SearchParams& params) {
  return simulated_annealing(inst, ScenarioSet::from_sample(sample), start, sa, params);
}

inline void write_history(std::ostream& os, const std::vector<HistoryRow>& rows) {
  os << "iteration,elapsed,phase,operator,accepted,objective\n";
  for (const HistoryRow& r : rows) {
    os << r.iteration << "," << format_fixed4(r.elapsed) << "," << r.phase << "," << r.op << ","
       << (r.accepted ? 1 : 0) << "," << format_fixed4(r.objective) << "\n";
  }
}

}  // namespace mms
