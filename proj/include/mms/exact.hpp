#pragma once

// Exact solution of the sampled problem.
//
//   recourse_lp        the second-stage LP of one scenario, for any doubly
//                      stochastic assignment (binary or fractional)
//   solve_dsp          its dual with an l1 tie-break, returning a Benders
//                      optimality cut
//   lshaped_solve      branch-and-Benders-cut over the assignment variables
//   enumerate_optimal  brute force over all permutations (small |V| only)
//
// LP data for the recourse problems is in ticks (1e-4 TU) so that the
// regularisation epsilon is a tiny fraction of one tick; cuts handed to the
// master are converted to TU.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "mms/error.hpp"
#include "mms/evaluator.hpp"
#include "mms/greedy.hpp"
#include "mms/instance.hpp"
#include "mms/lp.hpp"
#include "mms/parallel.hpp"
#include "mms/scenario.hpp"
#include "mms/sequence.hpp"

namespace mms {

// x(v, t) for |V| vehicles and as many positions; rows of the permutation
// matrix of a sequence, or a fractional point of the assignment polytope.
struct Assignment {
  int n = 0;
  std::vector<double> x;  // index v * n + t

  double operator()(int v, int t) const { return x[static_cast<std::size_t>(v) * n + t]; }
  double& operator()(int v, int t) { return x[static_cast<std::size_t>(v) * n + t]; }

  static Assignment zeros(int n) { return {n, std::vector<double>(static_cast<std::size_t>(n) * n)}; }
  static Assignment from_sequence(const Sequence& seq) {
    Assignment a = zeros(seq.size());
    for (int t = 0; t < seq.size(); ++t) a(seq.order[t], t) = 1.0;
    return a;
  }
  static Assignment uniform(int n) {
    return {n, std::vector<double>(static_cast<std::size_t>(n) * n, 1.0 / n)};
  }
};

namespace detail {

inline double scenario_p(const Instance& inst, const Scenario& sc, int k, int v,
                         ScenarioTransform variant) {
  if (sc.exists[v]) return static_cast<double>(inst.p(k, v).ticks());
  return variant == ScenarioTransform::kStandardZero
             ? 0.0
             : static_cast<double>(inst.cycle_time.ticks());
}

// b_kt in ticks under the given transform (improved or standard).
inline std::vector<double> fractional_times(const Instance& inst, const Assignment& x,
                                            const Scenario& sc, ScenarioTransform variant) {
  const int K = inst.num_stations();
  const int T = x.n;
  std::vector<double> b(static_cast<std::size_t>(K) * T, 0.0);
  for (int k = 0; k < K; ++k) {
    for (int t = 0; t < T; ++t) {
      double s = 0.0;
      for (int v = 0; v < T; ++v) {
        const double xv = x(v, t);
        if (xv != 0.0) s += scenario_p(inst, sc, k, v, variant) * xv;
      }
      b[static_cast<std::size_t>(k) * T + t] = s;
    }
  }
  return b;
}

inline Sequence sequence_from_binary(const Assignment& x) {
  Sequence seq;
  seq.order.assign(x.n, -1);
  for (int v = 0; v < x.n; ++v) {
    for (int t = 0; t < x.n; ++t) {
      if (x(v, t) > 0.5) seq.order[t] = v;
    }
  }
  return seq;
}

inline bool is_binary(const Assignment& x, double tol = 1e-6) {
  for (double v : x.x) {
    if (std::abs(v) > tol && std::abs(v - 1.0) > tol) return false;
  }
  return true;
}

}  // namespace detail

struct RecourseResult {
  LPStatus status = LPStatus::kInfeasible;
  double objective = 0.0;  // TU
  LinearProgram lp;
};

// Builds and solves the scenario's second-stage LP. With the removal
// variant, failed positions are deleted, which needs a binary x.
inline RecourseResult recourse_lp(const Instance& inst, const Assignment& x, const Scenario& sc,
                                  ScenarioTransform variant, bool regenerative = true) {
  if (x.n != inst.num_vehicles()) throw InvalidInput("recourse_lp: assignment size mismatch");
  const int K = inst.num_stations();
  std::vector<double> b;  // ticks, station-major
  int T = x.n;
  if (variant == ScenarioTransform::kRemoval) {
    if (!detail::is_binary(x)) throw InvalidInput("recourse_lp: removal variant needs binary x");
    const Sequence seq = detail::sequence_from_binary(x);
    const auto times = effective_times(inst, seq, sc, ScenarioTransform::kRemoval);
    T = static_cast<int>(times.empty() ? 0 : times[0].size());
    for (int k = 0; k < K; ++k) {
      for (Time tm : times[k]) b.push_back(static_cast<double>(tm.ticks()));
    }
  } else {
    b = detail::fractional_times(inst, x, sc, variant);
  }

  RecourseResult res;
  if (T == 0) {
    res.status = LPStatus::kOptimal;
    return res;
  }
  LinearProgram& lp = res.lp;
  const double c = static_cast<double>(inst.cycle_time.ticks());
  // z_k1..z_k(T+1), then w_k1..w_kT.
  std::vector<int> z(static_cast<std::size_t>(K) * (T + 1));
  std::vector<int> w(static_cast<std::size_t>(K) * T);
  for (int k = 0; k < K; ++k) {
    for (int t = 0; t <= T; ++t) {
      double hi = kInf;
      if (t == 0 || (t == T && regenerative)) hi = 0.0;
      z[static_cast<std::size_t>(k) * (T + 1) + t] = lp.add_variable(0.0, 0.0, hi);
    }
    for (int t = 0; t < T; ++t) w[static_cast<std::size_t>(k) * T + t] = lp.add_variable(1.0);
  }
  for (int k = 0; k < K; ++k) {
    const double l = static_cast<double>(inst.length(k).ticks());
    const double beta = inst.beta(k);
    for (int t = 0; t < T; ++t) {
      const int zt = z[static_cast<std::size_t>(k) * (T + 1) + t];
      const int zn = z[static_cast<std::size_t>(k) * (T + 1) + t + 1];
      const int wt = w[static_cast<std::size_t>(k) * T + t];
      const double bt = b[static_cast<std::size_t>(k) * T + t];
      lp.add_sparse_row({{zt, 1.0}, {zn, -1.0}, {wt, -1.0}}, RowSense::kLe, c - bt);
      lp.add_sparse_row({{zt, 1.0}, {wt, -1.0}}, RowSense::kLe, l - bt);
      if (variant == ScenarioTransform::kStandardZero) {
        if (t + 1 < T || !regenerative) {
          lp.add_sparse_row({{zt, 1.0}, {zn, -1.0}}, RowSense::kLe, beta * bt);
        } else {
          lp.add_sparse_row({{zt, 1.0}, {wt, -1.0}}, RowSense::kLe, beta * bt);
        }
      }
    }
  }
  const LPResult r = solve_lp(lp);
  res.status = r.status;
  res.objective = r.objective / static_cast<double>(Time::kScale);
  return res;
}

inline RecourseResult recourse_lp(const Instance& inst, const Sequence& seq, const Scenario& sc,
                                  ScenarioTransform variant, bool regenerative = true) {
  return recourse_lp(inst, Assignment::from_sequence(seq), sc, variant, regenerative);
}

// Dual multipliers of the improved recourse LP, station-major k * T + t.
struct DualSolution {
  int num_stations = 0;
  int num_positions = 0;
  std::vector<double> pi_sp;  // starting-position rows
  std::vector<double> pi_wo;  // work-overload rows
  // Multipliers of the standard-model dual that the improved dual drops;
  // kept for completeness and always empty here.
  std::vector<double> pi_fs, pi_ch, pi_sf, pi_cf;

  double sp(int k, int t) const { return pi_sp[static_cast<std::size_t>(k) * num_positions + t]; }
  double wo(int k, int t) const { return pi_wo[static_cast<std::size_t>(k) * num_positions + t]; }

  // Largest violation of the dual constraints (0 when feasible).
  double max_violation(bool regenerative = true) const {
    double worst = 0.0;
    const int T = num_positions;
    for (int k = 0; k < num_stations; ++k) {
      for (int t = 0; t < T; ++t) {
        worst = std::max({worst, -sp(k, t), -wo(k, t), sp(k, t) + wo(k, t) - 1.0});
        if (t + 1 < T) worst = std::max(worst, sp(k, t) - sp(k, t + 1) - wo(k, t + 1));
        if (t + 1 == T && !regenerative) worst = std::max(worst, sp(k, t));
      }
    }
    return worst;
  }
};

// theta_scenario >= G . x + g, in TU.
struct OptimalityCut {
  int scenario = -1;
  std::vector<double> G;  // index v * |V| + t
  double g = 0.0;

  double value(const Assignment& x) const {
    double s = g;
    for (std::size_t i = 0; i < G.size(); ++i) s += G[i] * x.x[i];
    return s;
  }
};

struct DspResult {
  DualSolution dual;
  OptimalityCut cut;
  double objective = 0.0;  // unregularised dual objective at x-hat, TU
  bool lexicographic = false;
};

namespace detail {

// Dual LP in ticks. `weights` multiplies the sum of all multipliers (the
// l1 term); `floor_ticks`, when set, adds the row "unregularised objective
// >= floor".
inline LPResult solve_dual_lp(const std::vector<double>& b, const Instance& inst, int T,
                              bool regenerative, double l1_weight, const double* floor_ticks,
                              bool objective_is_l1_only) {
  const int K = inst.num_stations();
  const double c = static_cast<double>(inst.cycle_time.ticks());
  LinearProgram lp;
  lp.maximize = true;
  auto sp = [&](int k, int t) { return 2 * (k * T + t); };
  auto wo = [&](int k, int t) { return 2 * (k * T + t) + 1; };
  std::vector<double> unreg;
  for (int k = 0; k < K; ++k) {
    const double l = static_cast<double>(inst.length(k).ticks());
    for (int t = 0; t < T; ++t) {
      const double bt = b[static_cast<std::size_t>(k) * T + t];
      const double hi_sp = (!regenerative && t + 1 == T) ? 0.0 : kInf;
      const double csp = bt - c;
      const double cwo = bt - l;
      unreg.push_back(csp);
      unreg.push_back(cwo);
      if (objective_is_l1_only) {
        lp.add_variable(1.0, 0.0, hi_sp);
        lp.add_variable(1.0, 0.0, kInf);
      } else {
        lp.add_variable(csp + l1_weight, 0.0, hi_sp);
        lp.add_variable(cwo + l1_weight, 0.0, kInf);
      }
    }
  }
  for (int k = 0; k < K; ++k) {
    for (int t = 0; t < T; ++t) {
      if (t + 1 < T) {
        lp.add_sparse_row({{sp(k, t), 1.0}, {sp(k, t + 1), -1.0}, {wo(k, t + 1), -1.0}},
                          RowSense::kLe, 0.0);
      }
      lp.add_sparse_row({{sp(k, t), 1.0}, {wo(k, t), 1.0}}, RowSense::kLe, 1.0);
    }
  }
  if (floor_ticks) lp.add_row(unreg, RowSense::kGe, *floor_ticks);
  return solve_lp(lp);
}

}  // namespace detail

// Solves the improved dual subproblem at x-hat. The +epsilon term (ticks)
// prefers, among alternative optima, duals with more nonzero components; the
// cut itself is always built from the unregularised data. If the selected
// duals fall short of `reference_ticks` (the recourse value at x-hat) by more
// than `tolerance_ticks`, a second LP maximises the l1 norm subject to
// reaching the reference.
inline DspResult solve_dsp(const Instance& inst, const Assignment& x, const Scenario& sc,
                           double epsilon = 1e-3, bool regenerative = true,
                           int scenario_index = -1) {
  const int K = inst.num_stations();
  const int T = x.n;
  const std::vector<double> b =
      detail::fractional_times(inst, x, sc, ScenarioTransform::kImprovedNeutral);

  double reference;
  if (detail::is_binary(x)) {
    reference = static_cast<double>(
        total_overload(inst, detail::sequence_from_binary(x), sc, regenerative).ticks());
  } else {
    reference = detail::solve_dual_lp(b, inst, T, regenerative, 0.0, nullptr, false).objective;
  }

  LPResult r = detail::solve_dual_lp(b, inst, T, regenerative, epsilon, nullptr, false);
  if (r.status != LPStatus::kOptimal) {
    throw Error(std::string("dual subproblem not solved: ") + to_string(r.status));
  }
  auto unreg_value = [&](const std::vector<double>& pi) {
    double s = 0.0;
    const double c = static_cast<double>(inst.cycle_time.ticks());
    for (int k = 0; k < K; ++k) {
      const double l = static_cast<double>(inst.length(k).ticks());
      for (int t = 0; t < T; ++t) {
        const double bt = b[static_cast<std::size_t>(k) * T + t];
        s += pi[2 * (k * T + t)] * (bt - c) + pi[2 * (k * T + t) + 1] * (bt - l);
      }
    }
    return s;
  };
  DspResult out;
  const double tolerance_ticks = 1e-3;
  if (unreg_value(r.x) < reference - tolerance_ticks) {
    const double floor = reference - tolerance_ticks / 2;
    LPResult lex = detail::solve_dual_lp(b, inst, T, regenerative, 0.0, &floor, true);
    if (lex.status == LPStatus::kOptimal) {
      r = std::move(lex);
      out.lexicographic = true;
    }
  }

  DualSolution& d = out.dual;
  d.num_stations = K;
  d.num_positions = T;
  d.pi_sp.resize(static_cast<std::size_t>(K) * T);
  d.pi_wo.resize(static_cast<std::size_t>(K) * T);
  for (int i = 0; i < K * T; ++i) {
    d.pi_sp[i] = r.x[2 * i];
    d.pi_wo[i] = r.x[2 * i + 1];
  }
  out.objective = unreg_value(r.x) / static_cast<double>(Time::kScale);

  OptimalityCut& cut = out.cut;
  cut.scenario = scenario_index;
  cut.G.assign(static_cast<std::size_t>(T) * T, 0.0);
  const double scale = static_cast<double>(Time::kScale);
  double g = 0.0;
  for (int k = 0; k < K; ++k) {
    const double l = static_cast<double>(inst.length(k).ticks());
    const double c = static_cast<double>(inst.cycle_time.ticks());
    for (int t = 0; t < T; ++t) {
      const double s = d.sp(k, t);
      const double o = d.wo(k, t);
      g -= s * c + o * l;
      if (s + o == 0.0) continue;
      for (int v = 0; v < T; ++v) {
        cut.G[static_cast<std::size_t>(v) * T + t] +=
            (s + o) * detail::scenario_p(inst, sc, k, v, ScenarioTransform::kImprovedNeutral);
      }
    }
  }
  for (double& gv : cut.G) gv /= scale;
  cut.g = g / scale;
  return out;
}

// ---------------------------------------------------------------------------
// Branch-and-Benders-cut

inline constexpr int kMaxExactVehicles = 12;
inline constexpr int kMaxEnumerationVehicles = 9;

struct LShapedParams {
  double epsilon = 1e-3;  // ticks
  double time_limit = kInf;  // seconds
  double gap_tol = 0.0;      // relative; infinity stops after the root
  bool regenerative = true;
  unsigned workers = 1;
  std::int64_t max_nodes = -1;
};

struct LShapedLogRow {
  std::int64_t node = 0;
  int depth = 0;
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t cuts_added = 0;
  std::int64_t open_nodes = 0;
  double elapsed = 0.0;
};

enum class SolveStatus { kOptimal, kGapReached, kTimeLimit, kNodeLimit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kGapReached: return "gap_reached";
    case SolveStatus::kTimeLimit: return "time_limit";
    case SolveStatus::kNodeLimit: return "node_limit";
  }
  return "?";
}

struct LShapedStats {
  std::int64_t nodes = 0;
  std::int64_t lp_solves = 0;
  std::int64_t lp_iterations = 0;
  std::int64_t dsp_solves = 0;
  std::int64_t lexicographic_dsp = 0;
  std::int64_t integer_nodes = 0;
  std::int64_t unresolved_integer_nodes = 0;
  double elapsed = 0.0;
  std::vector<OptimalityCut> cuts;  // every generated cut, in generation order
  std::vector<LShapedLogRow> log;
};

struct LShapedResult {
  SolveStatus status = SolveStatus::kOptimal;
  Sequence sequence;
  double lower_bound = 0.0;
  double upper_bound = 0.0;  // expected overload of `sequence`
  LShapedStats stats;

  double gap() const {
    return upper_bound <= 1e-12 ? 0.0 : (upper_bound - lower_bound) / upper_bound;
  }
};

namespace detail {

struct BbNode {
  std::int64_t id = 0;
  int depth = 0;
  double bound = 0.0;
  std::vector<std::pair<int, int>> fixings;  // (variable, 0 or 1)
  std::vector<int> cuts;                     // pool ids active at the start
};

struct NodeOrder {
  bool operator()(const BbNode& a, const BbNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

class BranchAndBendersCut {
 public:
  BranchAndBendersCut(const Instance& inst, const ScenarioSet& set, const LShapedParams& params)
      : inst_(inst), set_(set), params_(params), n_(inst.num_vehicles()) {}

  LShapedResult run() {
    start_ = std::chrono::steady_clock::now();
    LShapedResult res;

    // Incumbent from the greedy construction, with its cuts in the pool.
    incumbent_ = construct(inst_).sequence;
    upper_ = expected(incumbent_);
    add_cuts_at(Assignment::from_sequence(incumbent_), nullptr);

    std::priority_queue<BbNode, std::vector<BbNode>, NodeOrder> open;
    BbNode root;
    root.id = next_id_++;
    for (std::size_t i = 0; i < pool_.size(); ++i) root.cuts.push_back(static_cast<int>(i));
    open.push(root);

    res.status = SolveStatus::kOptimal;
    double global_lower = 0.0;
    bool root_done = false;
    while (!open.empty()) {
      global_lower = std::max(global_lower, std::min(open.top().bound, upper_));
      global_lower_ = std::max(global_lower_, global_lower);
      if (global_lower >= upper_ - kPruneTol) break;
      if (gap_closed(global_lower) || (root_done && !std::isfinite(params_.gap_tol))) {
        res.status = SolveStatus::kGapReached;
        break;
      }
      if (elapsed() > params_.time_limit) {
        res.status = SolveStatus::kTimeLimit;
        break;
      }
      if (params_.max_nodes >= 0 && stats_.nodes >= params_.max_nodes) {
        res.status = SolveStatus::kNodeLimit;
        break;
      }
      BbNode node = open.top();
      open.pop();
      process(node, open);
      root_done = true;
    }
    if (res.status == SolveStatus::kOptimal) global_lower = upper_;
    stats_.elapsed = elapsed();
    res.sequence = incumbent_;
    res.upper_bound = upper_;
    res.lower_bound = std::min(global_lower, upper_);
    res.stats = std::move(stats_);
    return res;
  }

 private:
  static constexpr double kPruneTol = 1e-7;     // TU
  static constexpr double kViolationTol = 1e-6;  // TU

  struct PoolCut {
    OptimalityCut cut;
  };

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  bool gap_closed(double lower) const {
    if (params_.gap_tol <= 0.0 || !std::isfinite(params_.gap_tol)) return false;
    return (upper_ - lower) <= params_.gap_tol * std::max(upper_, 1e-12);
  }

  double expected(const Sequence& seq) const {
    return evaluate_expected(inst_, seq, set_, params_.regenerative, params_.workers);
  }

  int var_x(int v, int t) const { return v * n_ + t; }
  int var_theta(int s) const { return n_ * n_ + s; }

  // Adds one DSP cut per scenario at x-hat (all scenarios when `theta` is
  // null, else only those whose theta is below the recourse value).
  // Returns the ids of new pool entries.
  std::vector<int> add_cuts_at(const Assignment& x, const std::vector<double>* theta) {
    const Sequence seq = sequence_from_binary(x);
    const std::size_t S = set_.size();
    std::vector<double> q(S);
    for (std::size_t s = 0; s < S; ++s) {
      q[s] = total_overload(inst_, seq, set_.scenario(s), params_.regenerative).to_double();
    }
    std::vector<std::size_t> todo;
    for (std::size_t s = 0; s < S; ++s) {
      if (!theta || (*theta)[s] < q[s] - kViolationTol) todo.push_back(s);
    }
    std::vector<DspResult> dsp(todo.size());
    parallel_for(todo.size(), params_.workers, [&](std::size_t i) {
      dsp[i] = solve_dsp(inst_, x, set_.scenario(todo[i]), params_.epsilon, params_.regenerative,
                         static_cast<int>(todo[i]));
    });
    std::vector<int> ids;
    for (DspResult& r : dsp) {
      ++stats_.dsp_solves;
      if (r.lexicographic) ++stats_.lexicographic_dsp;
      stats_.cuts.push_back(r.cut);
      const auto key = cut_key(r.cut);
      if (seen_.insert(key).second) {
        pool_.push_back({std::move(r.cut)});
        ids.push_back(static_cast<int>(pool_.size()) - 1);
      }
    }
    return ids;
  }

  static std::vector<std::int64_t> cut_key(const OptimalityCut& c) {
    std::vector<std::int64_t> key;
    key.reserve(c.G.size() + 2);
    key.push_back(c.scenario);
    for (double gv : c.G) key.push_back(std::llround(gv * 1e6));
    key.push_back(std::llround(c.g * 1e6));
    return key;
  }

  LinearProgram build_lp(const BbNode& node, const std::vector<int>& cuts) const {
    LinearProgram lp;
    std::vector<double> lo(n_ * n_, 0.0), hi(n_ * n_, 1.0);
    for (const auto& [var, val] : node.fixings) lo[var] = hi[var] = val;
    for (int i = 0; i < n_ * n_; ++i) lp.add_variable(0.0, lo[i], hi[i]);
    for (std::size_t s = 0; s < set_.size(); ++s) lp.add_variable(set_.weight(s), 0.0, kInf);
    for (int t = 0; t < n_; ++t) {
      std::vector<std::pair<int, double>> row;
      for (int v = 0; v < n_; ++v) row.emplace_back(var_x(v, t), 1.0);
      lp.add_sparse_row(row, RowSense::kEq, 1.0);
    }
    for (int v = 0; v < n_; ++v) {
      std::vector<std::pair<int, double>> row;
      for (int t = 0; t < n_; ++t) row.emplace_back(var_x(v, t), 1.0);
      lp.add_sparse_row(row, RowSense::kEq, 1.0);
    }
    for (int id : cuts) append_cut(lp, pool_[id].cut);
    return lp;
  }

  void append_cut(LinearProgram& lp, const OptimalityCut& cut) const {
    std::vector<double> row(lp.num_vars(), 0.0);
    for (int i = 0; i < n_ * n_; ++i) row[i] = -cut.G[i];
    row[var_theta(cut.scenario)] = 1.0;
    lp.add_row(std::move(row), RowSense::kGe, cut.g);
  }

  void process(const BbNode& node, std::priority_queue<BbNode, std::vector<BbNode>, NodeOrder>& open) {
    ++stats_.nodes;
    std::vector<int> active = node.cuts;
    std::set<int> active_set(active.begin(), active.end());
    std::int64_t cuts_added = 0;
    while (true) {
      const LinearProgram lp = build_lp(node, active);
      const LPResult r = solve_lp(lp);
      ++stats_.lp_solves;
      stats_.lp_iterations += r.iterations;
      if (r.status == LPStatus::kInfeasible) return;
      if (r.status != LPStatus::kOptimal) {
        throw Error(std::string("master LP not solved: ") + to_string(r.status));
      }
      const double bound = std::max(r.objective, node.bound);
      if (bound >= upper_ - kPruneTol) {
        log(node, cuts_added, open);
        return;
      }
      Assignment x = Assignment::zeros(n_);
      std::copy(r.x.begin(), r.x.begin() + n_ * n_, x.x.begin());
      std::vector<double> theta(r.x.begin() + n_ * n_, r.x.end());

      // Lazy separation from the pool.
      bool added = false;
      for (std::size_t id = 0; id < pool_.size(); ++id) {
        if (active_set.count(static_cast<int>(id))) continue;
        const OptimalityCut& c = pool_[id].cut;
        if (theta[c.scenario] < c.value(x) - kViolationTol) {
          active.push_back(static_cast<int>(id));
          active_set.insert(static_cast<int>(id));
          added = true;
        }
      }
      if (added) continue;

      if (is_binary(x)) {
        ++stats_.integer_nodes;
        const Sequence seq = sequence_from_binary(x);
        const double value = expected(seq);
        if (value < upper_) {
          upper_ = value;
          incumbent_ = seq;
        }
        const std::vector<int> fresh = add_cuts_at(x, &theta);
        bool violated = false;
        for (int id : fresh) {
          const OptimalityCut& c = pool_[id].cut;
          if (theta[c.scenario] < c.value(x) - kViolationTol) violated = true;
          active.push_back(id);
          active_set.insert(id);
          ++cuts_added;
        }
        if (violated) continue;
        bool exact = true;
        for (std::size_t sc = 0; sc < set_.size(); ++sc) {
          const double q =
              total_overload(inst_, seq, set_.scenario(sc), params_.regenerative).to_double();
          if (theta[sc] < q - kViolationTol) exact = false;
        }
        if (exact) {
          // theta matches the recourse: nothing in this subtree beats x.
          log(node, cuts_added, open);
          return;
        }
        // No new cut closes the gap at x. Fix one more variable so the
        // subtree shrinks to x itself instead of being pruned unsoundly.
        ++stats_.unresolved_integer_nodes;
        std::vector<bool> fixed(n_ * n_, false);
        for (const auto& [var, val] : node.fixings) fixed[var] = true;
        int free_var = -1;
        for (int i = 0; i < n_ * n_ && free_var < 0; ++i) {
          if (!fixed[i]) free_var = i;
        }
        if (free_var < 0) {
          log(node, cuts_added, open);
          return;
        }
        push_children(node, free_var, bound, active, open);
        log(node, cuts_added, open);
        return;
      }

      // Branch on the most fractional x, ties by (v, t).
      int branch = -1;
      double best = -1.0;
      for (int i = 0; i < n_ * n_; ++i) {
        const double f = std::min(x.x[i], 1.0 - x.x[i]);
        if (f > best + 1e-12) {
          best = f;
          branch = i;
        }
      }
      push_children(node, branch, bound, active, open, &x, &theta);
      log(node, cuts_added, open);
      return;
    }
  }

  // Children inherit the cuts that are binding at the parent's solution
  // (all active cuts when no solution is given).
  void push_children(const BbNode& node, int var, double bound, const std::vector<int>& active,
                     std::priority_queue<BbNode, std::vector<BbNode>, NodeOrder>& open,
                     const Assignment* x = nullptr, const std::vector<double>* theta = nullptr) {
    std::vector<int> binding;
    for (int id : active) {
      const OptimalityCut& c = pool_[id].cut;
      if (!x || (*theta)[c.scenario] - c.value(*x) <= kViolationTol) binding.push_back(id);
    }
    for (int val : {0, 1}) {
      BbNode child;
      child.id = next_id_++;
      child.depth = node.depth + 1;
      child.bound = bound;
      child.fixings = node.fixings;
      child.fixings.emplace_back(var, val);
      child.cuts = binding;
      open.push(std::move(child));
    }
  }

  // Logs the global bound (best open node), not the node's own LP value.
  void log(const BbNode& node, std::int64_t cuts_added,
           const std::priority_queue<BbNode, std::vector<BbNode>, NodeOrder>& open) {
    const double open_min = open.empty() ? upper_ : open.top().bound;
    global_lower_ = std::max(global_lower_, std::min(open_min, upper_));
    stats_.log.push_back({node.id, node.depth, global_lower_, upper_, cuts_added,
                          static_cast<std::int64_t>(open.size()), elapsed()});
  }

  const Instance& inst_;
  const ScenarioSet& set_;
  LShapedParams params_;
  int n_;
  std::chrono::steady_clock::time_point start_;
  Sequence incumbent_;
  double upper_ = kInf;
  double global_lower_ = 0.0;
  std::vector<PoolCut> pool_;
  std::set<std::vector<std::int64_t>> seen_;
  std::int64_t next_id_ = 0;
  LShapedStats stats_;
};

}  // namespace detail

inline LShapedResult lshaped_solve(const Instance& inst, const ScenarioSet& set,
                                   const LShapedParams& params = {}) {
  if (inst.num_vehicles() > kMaxExactVehicles) {
    throw GuardViolation("exact search is limited to " + std::to_string(kMaxExactVehicles) +
                         " vehicles (instance has " + std::to_string(inst.num_vehicles()) + ")");
  }
  detail::BranchAndBendersCut bb(inst, set, params);
  return bb.run();
}

inline LShapedResult lshaped_solve(const Instance& inst, const Sample& sample,
                                   const LShapedParams& params = {}) {
  return lshaped_solve(inst, ScenarioSet::from_sample(sample), params);
}

struct EnumerationResult {
  Sequence sequence;
  double objective = 0.0;
  std::int64_t evaluated = 0;
};

// Lexicographically smallest minimiser over all |V|! sequences.
inline EnumerationResult enumerate_optimal(const Instance& inst, const ScenarioSet& set,
                                           bool regenerative = true) {
  const int n = inst.num_vehicles();
  if (n > kMaxEnumerationVehicles) {
    throw GuardViolation("enumeration is limited to " + std::to_string(kMaxEnumerationVehicles) +
                         " vehicles (instance has " + std::to_string(n) + ")");
  }
  EnumerationResult best;
  Sequence seq = Sequence::identity(n);
  std::vector<Time> totals(set.size());
  bool first = true;
  do {
    for (std::size_t s = 0; s < set.size(); ++s) {
      totals[s] = total_overload(inst, seq, set.scenario(s), regenerative);
    }
    const double value = set.combine(totals);
    ++best.evaluated;
    if (first || value < best.objective) {
      best.sequence = seq;
      best.objective = value;
      first = false;
    }
  } while (std::next_permutation(seq.order.begin(), seq.order.end()));
  return best;
}

inline EnumerationResult enumerate_optimal(const Instance& inst, const Sample& sample,
                                           bool regenerative = true) {
  return enumerate_optimal(inst, ScenarioSet::from_sample(sample), regenerative);
}

inline void write_solver_log(std::ostream& os, const LShapedStats& stats) {
  os << "node,depth,lower,upper,cuts_added,open_nodes,elapsed\n";
  for (const auto& r : stats.log) {
    os << r.node << "," << r.depth << "," << format_fixed4(r.lower) << "," << format_fixed4(r.upper)
       << "," << r.cuts_added << "," << r.open_nodes << "," << format_fixed4(r.elapsed) << "\n";
  }
}

inline void write_summary_csv(std::ostream& os, const LShapedResult& r, bool header = true) {
  if (header) os << "status,objective,lower,upper,gap,nodes,lp_solves,cuts,elapsed\n";
  os << to_string(r.status) << "," << format_fixed4(r.upper_bound) << ","
     << format_fixed4(r.lower_bound) << "," << format_fixed4(r.upper_bound) << ","
     << format_fixed4(r.gap()) << "," << r.stats.nodes << "," << r.stats.lp_solves << ","
     << r.stats.cuts.size() << "," << format_fixed4(r.stats.elapsed) << "\n";
}

}  // namespace mms
