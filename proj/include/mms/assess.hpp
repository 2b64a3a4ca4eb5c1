#pragma once

// Statistical quality assessment of a candidate sequence: the multiple
// replication procedure (an upper confidence bound on the optimality gap)
// and the loop that grows the SAA sample until the bound is small enough.

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "mms/error.hpp"
#include "mms/evaluator.hpp"
#include "mms/exact.hpp"
#include "mms/greedy.hpp"
#include "mms/instance.hpp"
#include "mms/rng.hpp"
#include "mms/scenario.hpp"
#include "mms/tabu.hpp"

namespace mms {

// One-sided quantile: P(T_dof > t) = alpha.
inline double t_quantile(double alpha, double dof) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("t_quantile: alpha must be in (0, 1)");
  if (!(dof >= 1.0)) throw InvalidInput("t_quantile: dof must be >= 1");
  if (alpha == 0.5) return 0.0;
  boost::math::students_t dist(dof);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

struct SaaSolution {
  Sequence sequence;
  double objective = 0.0;  // optimal (or best found) SAA value on the sample
};

// Solves the SAA problem on one sample. `seed` lets heuristic solvers draw
// their own randomness per replication.
using SaaSolver = std::function<SaaSolution(const Instance&, const Sample&, std::uint64_t seed)>;

inline SaaSolver exact_solver(LShapedParams params = {}) {
  return [params](const Instance& inst, const Sample& s, std::uint64_t) {
    const LShapedResult r = lshaped_solve(inst, s, params);
    if (r.status != SolveStatus::kOptimal) {
      throw Error(std::string("exact solver stopped early: ") + to_string(r.status));
    }
    return SaaSolution{r.sequence, r.upper_bound};
  };
}

inline SaaSolver enumeration_solver() {
  return [](const Instance& inst, const Sample& s, std::uint64_t) {
    const EnumerationResult r = enumerate_optimal(inst, s);
    return SaaSolution{r.sequence, r.objective};
  };
}

// Greedy start, then both search phases.
inline SaaSolver tabu_solver(SearchParams params) {
  return [params](const Instance& inst, const Sample& s, std::uint64_t seed) {
    SearchParams p = params;
    p.seed = seed;
    const Sequence start = construct(inst, seed).sequence;
    const SearchResult r = search(inst, s, start, p);
    return SaaSolution{r.best, r.objective};
  };
}

struct MRPReplication {
  int m = 0;
  std::uint64_t sample_seed = 0;
  double z = 0.0;      // sample optimum z^m_N
  double z_hat = 0.0;  // candidate's cost on the same sample
  double gap = 0.0;    // z_hat - z
};

struct MRPReport {
  std::vector<MRPReplication> rows;
  int replications_requested = 0;
  std::int64_t sample_size = 0;
  double alpha = 0.05;
  double mean_gap = 0.0;      // G-bar
  double gap_variance = 0.0;  // s_G^2
  double mean_z = 0.0;        // z-bar
  double t_value = 0.0;
  double bound = 0.0;             // G-bar + t * s_G / sqrt(M)
  double normalized_bound = 0.0;  // bound / z-bar, or bound when z-bar ~ 0
  bool unnormalized = false;      // z-bar below 1e-9
  bool complete = true;
  std::string error;

  // Recomputes the aggregates from `rows`.
  void finalize() {
    const double M = static_cast<double>(rows.size());
    mean_gap = mean_z = gap_variance = bound = normalized_bound = t_value = 0.0;
    if (rows.empty()) return;
    for (const auto& r : rows) {
      mean_gap += r.gap;
      mean_z += r.z;
    }
    mean_gap /= M;
    mean_z /= M;
    if (rows.size() >= 2) {
      for (const auto& r : rows) gap_variance += (r.gap - mean_gap) * (r.gap - mean_gap);
      gap_variance /= M - 1.0;
      t_value = t_quantile(alpha, M - 1.0);
    }
    bound = mean_gap + t_value * std::sqrt(gap_variance) / std::sqrt(M);
    unnormalized = mean_z < 1e-9;
    normalized_bound = unnormalized ? bound : bound / mean_z;
  }
};

struct MRPOptions {
  int replications = 30;
  std::int64_t sample_size = 5000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  bool forbid_low_risk_failures = false;
  bool regenerative = true;
};

// Seed of replication m's sample; replication m can be reproduced alone.
inline std::uint64_t replication_seed(std::uint64_t seed, int m) {
  return derive_seed(seed, static_cast<std::uint64_t>(m));
}

inline MRPReport mrp(const Instance& inst, const Sequence& candidate, const MRPOptions& opt,
                     const SaaSolver& solver) {
  if (opt.replications < 2) throw InvalidInput("mrp: need at least 2 replications");
  if (!candidate.is_permutation_of(inst.num_vehicles())) {
    throw InvalidInput("mrp: candidate is not a permutation of the instance's vehicles");
  }
  MRPReport rep;
  rep.replications_requested = opt.replications;
  rep.sample_size = opt.sample_size;
  rep.alpha = opt.alpha;
  for (int m = 0; m < opt.replications; ++m) {
    MRPReplication row;
    row.m = m + 1;
    row.sample_seed = replication_seed(opt.seed, m);
    try {
      const Sample s = sample(inst, opt.sample_size, row.sample_seed, opt.forbid_low_risk_failures);
      const SaaSolution sol = solver(inst, s, derive_seed(row.sample_seed, 1));
      row.z = sol.objective;
      row.z_hat = evaluate_expected(inst, candidate, s, opt.regenerative);
      row.gap = row.z_hat - row.z;
    } catch (const std::exception& e) {
      rep.complete = false;
      rep.error = "replication " + std::to_string(m + 1) + ": " + e.what();
      break;
    }
    rep.rows.push_back(row);
  }
  rep.finalize();
  return rep;
}

struct IntegratedTraceRow {
  std::int64_t n = 0;
  double candidate_objective = 0.0;
  double bound = 0.0;
  bool accepted = false;
};

struct IntegratedResult {
  Sequence sequence;
  double gap = 0.0;
  bool met = false;  // some candidate reached the threshold
  std::int64_t stop_n = 0;
  std::vector<IntegratedTraceRow> trace;
  std::vector<MRPReport> reports;
};

// For each N in `n_list`: solve the SAA problem on a fresh sample of size
// N, assess it, and stop at the first candidate whose normalised bound is
// at most `epsilon`. Otherwise the last candidate is returned with met =
// false.
inline IntegratedResult mrp_integrated_saa(const Instance& inst,
                                           const std::vector<std::int64_t>& n_list,
                                           double epsilon, const MRPOptions& mrp_opt,
                                           const SaaSolver& solver) {
  if (n_list.empty()) throw InvalidInput("mrp_integrated_saa: empty sample-size list");
  for (std::size_t i = 1; i < n_list.size(); ++i) {
    if (n_list[i] <= n_list[i - 1]) {
      throw InvalidInput("mrp_integrated_saa: sample sizes must be ascending");
    }
  }
  IntegratedResult out;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const std::uint64_t cand_seed = derive_seed(mrp_opt.seed, 1000 + i);
    const Sample s = sample(inst, n_list[i], cand_seed, mrp_opt.forbid_low_risk_failures);
    const SaaSolution cand = solver(inst, s, derive_seed(cand_seed, 1));
    MRPOptions o = mrp_opt;
    o.seed = derive_seed(mrp_opt.seed, 2000 + i);
    MRPReport rep = mrp(inst, cand.sequence, o, solver);
    if (!rep.complete) throw Error("mrp_integrated_saa: " + rep.error);
    const bool ok = rep.normalized_bound <= epsilon;
    out.trace.push_back({n_list[i], cand.objective, rep.normalized_bound, ok});
    out.sequence = cand.sequence;
    out.gap = rep.normalized_bound;
    out.stop_n = n_list[i];
    out.reports.push_back(std::move(rep));
    if (ok) {
      out.met = true;
      break;
    }
  }
  return out;
}

// One row per replication, then an aggregate row (m = "all").
inline void write_mrp_csv(std::ostream& os, const MRPReport& r) {
  os << "m,sample_seed,z,z_hat,gap,mean_gap,gap_variance,mean_z,t_value,bound,normalized_bound,"
        "unnormalized\n";
  for (const auto& row : r.rows) {
    os << row.m << "," << row.sample_seed << "," << format_fixed4(row.z) << ","
       << format_fixed4(row.z_hat) << "," << format_fixed4(row.gap) << ",,,,,,,\n";
  }
  os << "all,,,,," << format_fixed4(r.mean_gap) << "," << format_fixed4(r.gap_variance) << ","
     << format_fixed4(r.mean_z) << "," << format_fixed4(r.t_value) << "," << format_fixed4(r.bound)
     << "," << format_fixed4(r.normalized_bound) << "," << (r.unnormalized ? 1 : 0) << "\n";
}

}  // namespace mms
