#pragma once

// Solver pipelines shared by the command-line tool and the acceptance
// suite: one entry point per method, run records, solution files, and the
// nominal-versus-stochastic comparison.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mms/assess.hpp"
#include "mms/error.hpp"
#include "mms/evaluator.hpp"
#include "mms/exact.hpp"
#include "mms/greedy.hpp"
#include "mms/instance.hpp"
#include "mms/scenario.hpp"
#include "mms/tabu.hpp"

namespace mms {

enum class Method { kGreedy, kTabu, kAnnealing, kLShaped, kEnumeration };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kGreedy: return "greedy";
    case Method::kTabu: return "ts";
    case Method::kAnnealing: return "sa";
    case Method::kLShaped: return "lshaped";
    case Method::kEnumeration: return "enum";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "greedy") return Method::kGreedy;
  if (s == "ts") return Method::kTabu;
  if (s == "sa") return Method::kAnnealing;
  if (s == "lshaped") return Method::kLShaped;
  if (s == "enum") return Method::kEnumeration;
  throw InvalidInput("unknown method '" + s + "' (expected greedy, ts, sa, lshaped or enum)");
}

struct RunOptions {
  Method method = Method::kTabu;
  std::uint64_t seed = 0;
  SearchParams search;  // budgets for ts / sa
  SAParams annealing;
  LShapedParams exact;
};

// Splits an iteration budget between the phases in the same 10 : 590
// proportion as the default time budgets.
inline void set_iteration_budget(SearchParams& p, std::int64_t iters) {
  p.iters_one = iters * 10 / 600;
  p.iters_full = iters - p.iters_one;
}

inline void set_time_budget(SearchParams& p, double seconds) {
  p.tau_one = seconds * 10.0 / 600.0;
  p.tau_full = seconds - p.tau_one;
}

struct RunRecord {
  std::string command;
  std::string instance_id;
  std::uint64_t seed = 0;
  std::uint64_t sample_seed = 0;
  std::int64_t sample_size = 0;
  std::string solver;
  std::string params;
  std::string status = "ok";
  double objective = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double gap = 0.0;
  double wall_time = 0.0;
  std::int64_t iterations = 0;
};

inline void write_run_records(std::ostream& os, const std::vector<RunRecord>& records) {
  os << "command,instance_id,seed,sample_seed,sample_size,solver,params,status,objective,"
        "lower_bound,upper_bound,gap,wall_time,iterations\n";
  for (const RunRecord& r : records) {
    os << r.command << "," << r.instance_id << "," << r.seed << "," << r.sample_seed << ","
       << r.sample_size << "," << r.solver << "," << r.params << "," << r.status << ","
       << format_fixed4(r.objective) << "," << format_fixed4(r.lower_bound) << ","
       << format_fixed4(r.upper_bound) << "," << format_fixed4(r.gap) << ","
       << format_fixed4(r.wall_time) << "," << r.iterations << "\n";
  }
}

struct RunOutput {
  Sequence sequence;
  RunRecord record;
  bool time_limit_hit = false;
  std::vector<HistoryRow> history;  // ts / sa
  LShapedStats exact_stats;         // lshaped
};

// Runs one method on the SAA problem given by `sample`.
inline RunOutput run_method(const Instance& inst, const Sample& smp, const RunOptions& opt) {
  RunOutput out;
  RunRecord& rec = out.record;
  rec.command = "solve";
  rec.instance_id = instance_id(inst);
  rec.seed = opt.seed;
  rec.sample_seed = smp.seed;
  rec.sample_size = smp.size();
  rec.solver = to_string(opt.method);
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioSet set = ScenarioSet::from_sample(smp);

  switch (opt.method) {
    case Method::kGreedy: {
      out.sequence = construct(inst, opt.seed).sequence;
      rec.objective = evaluate_expected(inst, out.sequence, set, opt.search.regenerative,
                                        opt.search.workers);
      rec.lower_bound = rec.upper_bound = rec.objective;
      break;
    }
    case Method::kTabu:
    case Method::kAnnealing: {
      SearchParams p = opt.search;
      p.seed = opt.seed;
      const Sequence start = construct(inst, opt.seed).sequence;
      SearchResult r;
      if (opt.method == Method::kTabu) {
        r = search(inst, set, start, p);
      } else {
        SAParams sa = opt.annealing;
        sa.seed = opt.seed;
        r = simulated_annealing(inst, set, start, sa, p);
      }
      out.sequence = r.best;
      rec.objective = r.objective;
      rec.upper_bound = r.objective;
      rec.iterations = r.iterations;
      out.history = std::move(r.history);
      std::ostringstream ps;
      if (p.iters_one >= 0 || p.iters_full >= 0) {
        ps << "iters=" << p.iters_one << "+" << p.iters_full;
      } else {
        ps << "tau=" << format_fixed4(p.tau_one) << "+" << format_fixed4(p.tau_full);
      }
      rec.params = ps.str();
      break;
    }
    case Method::kLShaped: {
      const LShapedResult r = lshaped_solve(inst, set, opt.exact);
      out.sequence = r.sequence;
      rec.objective = r.upper_bound;
      rec.lower_bound = r.lower_bound;
      rec.upper_bound = r.upper_bound;
      rec.gap = r.gap();
      rec.iterations = r.stats.nodes;
      rec.status = to_string(r.status);
      out.time_limit_hit = r.status == SolveStatus::kTimeLimit;
      out.exact_stats = r.stats;
      break;
    }
    case Method::kEnumeration: {
      const EnumerationResult r = enumerate_optimal(inst, set, opt.search.regenerative);
      out.sequence = r.sequence;
      rec.objective = r.objective;
      rec.lower_bound = rec.upper_bound = r.objective;
      rec.iterations = r.evaluated;
      break;
    }
  }
  if (opt.method == Method::kTabu || opt.method == Method::kAnnealing) {
    rec.lower_bound = 0.0;
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// Zeroes every wall-clock field so repeated runs are byte-identical.
inline void strip_timing(RunOutput& out) {
  out.record.wall_time = 0.0;
  for (auto& h : out.history) h.elapsed = 0.0;
  out.exact_stats.elapsed = 0.0;
  for (auto& l : out.exact_stats.log) l.elapsed = 0.0;
}

// ---------------------------------------------------------------------------
// Solution files

inline constexpr const char* kSolutionVersion = "mms-solution/1";

struct SolutionFile {
  std::string instance_id;
  std::uint64_t sample_seed = 0;
  Sequence sequence;
};

inline std::string serialize(const SolutionFile& s) {
  std::ostringstream os;
  os << "version: " << kSolutionVersion << "\n";
  os << "instance: " << s.instance_id << "\n";
  os << "sample_seed: " << s.sample_seed << "\n";
  os << "sequence: " << s.sequence.to_string() << "\n";
  return os.str();
}

inline SolutionFile parse_solution(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto field = [&](const std::string& key) {
    if (!std::getline(in, line) || line.rfind(key + ": ", 0) != 0) {
      throw ParseError("solution file: expected '" + key + ":' line");
    }
    return line.substr(key.size() + 2);
  };
  if (field("version") != kSolutionVersion) throw ParseError("solution file: unsupported version");
  SolutionFile s;
  s.instance_id = field("instance");
  try {
    s.sample_seed = std::stoull(field("sample_seed"));
  } catch (const std::logic_error&) {
    throw ParseError("solution file: bad sample_seed");
  }
  std::istringstream seq(field("sequence"));
  int v;
  while (seq >> v) s.sequence.order.push_back(v);
  if (!seq.eof()) throw ParseError("solution file: bad vehicle id in sequence");
  return s;
}

inline SolutionFile load_solution(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open solution file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_solution(ss.str());
}

// ---------------------------------------------------------------------------
// Nominal versus stochastic

struct CompareOptions {
  RunOptions run;
  std::int64_t sample_size = 100;
  std::uint64_t sample_seed = 1;
  bool forbid_low_risk_failures = false;
  // Out-of-sample evaluation: the exact expectation over all scenarios when
  // |V| <= exact_eval_limit, else a fresh sample of eval_size.
  int exact_eval_limit = 12;
  std::int64_t eval_size = 10000;
  std::uint64_t eval_seed = 2;
};

struct CompareResult {
  std::string instance_id;
  std::string method;
  std::string evaluation;  // "exact" or "sampled"
  Sequence nominal_sequence;
  Sequence saa_sequence;
  double nominal_in_sample = 0.0;  // one-scenario objective
  double saa_in_sample = 0.0;      // SAA objective
  double nominal_expected = 0.0;   // out-of-sample
  double saa_expected = 0.0;
  double improvement_pct = 0.0;    // (nominal - saa) / nominal * 100
};

inline CompareResult compare(const Instance& inst, const CompareOptions& opt) {
  CompareResult res;
  res.instance_id = instance_id(inst);
  res.method = to_string(opt.run.method);
  const Sample nominal = Sample::nominal(inst.num_vehicles());
  const Sample saa = sample(inst, opt.sample_size, opt.sample_seed, opt.forbid_low_risk_failures);
  const RunOutput a = run_method(inst, nominal, opt.run);
  const RunOutput b = run_method(inst, saa, opt.run);
  res.nominal_sequence = a.sequence;
  res.saa_sequence = b.sequence;
  res.nominal_in_sample = a.record.objective;
  res.saa_in_sample = b.record.objective;

  ScenarioSet eval;
  if (inst.num_vehicles() <= opt.exact_eval_limit) {
    eval = ScenarioSet::from_probabilities(enumerate_all(inst));
    res.evaluation = "exact";
  } else {
    eval = ScenarioSet::from_sample(
        sample(inst, opt.eval_size, opt.eval_seed, opt.forbid_low_risk_failures));
    res.evaluation = "sampled";
  }
  const bool regen = opt.run.search.regenerative;
  res.nominal_expected = evaluate_expected(inst, a.sequence, eval, regen, opt.run.search.workers);
  res.saa_expected = a.sequence == b.sequence
                         ? res.nominal_expected
                         : evaluate_expected(inst, b.sequence, eval, regen, opt.run.search.workers);
  res.improvement_pct = res.nominal_expected > 0.0
                            ? (res.nominal_expected - res.saa_expected) / res.nominal_expected * 100.0
                            : 0.0;
  return res;
}

inline void write_compare_csv(std::ostream& os, const std::vector<CompareResult>& rows) {
  os << "instance_id,method,evaluation,nominal_in_sample,saa_in_sample,nominal_expected,"
        "saa_expected,improvement_pct,nominal_sequence,saa_sequence\n";
  for (const CompareResult& r : rows) {
    os << r.instance_id << "," << r.method << "," << r.evaluation << ","
       << format_fixed4(r.nominal_in_sample) << "," << format_fixed4(r.saa_in_sample) << ","
       << format_fixed4(r.nominal_expected) << "," << format_fixed4(r.saa_expected) << ","
       << format_fixed4(r.improvement_pct) << "," << r.nominal_sequence.to_string() << ","
       << r.saa_sequence.to_string() << "\n";
  }
}

}  // namespace mms
