// mms: generate instances, solve, assess and compare from the command line.
//
// Exit codes: 0 success, 1 unexpected error, 2 invalid input or bad flags,
// 3 size guard violated, 4 time limit reached (an incumbent is still written).

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mms/mms.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitGuard = 3;
constexpr int kExitTimeLimit = 4;

// Iterations used for ts / sa when --deterministic is given without --iters.
constexpr std::int64_t kDefaultDeterministicIters = 6000;

struct CommonFlags {
  std::string method = "ts";
  std::int64_t sample_size = 100;
  std::uint64_t sample_seed = 1;
  std::uint64_t seed = 0;
  std::optional<double> time_limit;
  std::optional<std::int64_t> iters;
  unsigned workers = 1;
  bool deterministic = false;
  bool forbid_low_risk = false;
  bool non_regenerative = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_sample = true) {
  cmd->add_option("--method", f.method, "greedy, ts, sa, lshaped or enum")
      ->capture_default_str();
  if (with_sample) {
    cmd->add_option("--sample-size", f.sample_size, "SAA sample size N (0: no-failure scenario only)")
        ->capture_default_str();
    cmd->add_option("--sample-seed", f.sample_seed, "seed of the SAA sample")->capture_default_str();
  }
  cmd->add_option("--seed", f.seed, "solver seed")->capture_default_str();
  cmd->add_option("--time-limit", f.time_limit, "seconds (ts/sa total budget, lshaped limit)");
  cmd->add_option("--iters", f.iters, "iteration budget for ts/sa, split 10:590 between phases");
  cmd->add_option("--workers", f.workers, "worker threads")->capture_default_str();
  cmd->add_flag("--deterministic", f.deterministic,
                "iteration budgets only and zeroed timing fields");
  cmd->add_flag("--forbid-low-risk-failures", f.forbid_low_risk,
                "low-risk vehicles never fail in sampled scenarios");
  cmd->add_flag("--non-regenerative", f.non_regenerative,
                "do not force the operator back to the border after the last position");
}

mms::RunOptions run_options(const CommonFlags& f) {
  mms::RunOptions o;
  o.method = mms::parse_method(f.method);
  o.seed = f.seed;
  o.search.workers = f.workers;
  o.search.regenerative = !f.non_regenerative;
  o.exact.workers = f.workers;
  o.exact.regenerative = !f.non_regenerative;
  if (f.iters) {
    if (*f.iters < 0) throw mms::InvalidInput("--iters must be >= 0");
    mms::set_iteration_budget(o.search, *f.iters);
  } else if (f.deterministic) {
    mms::set_iteration_budget(o.search, kDefaultDeterministicIters);
  } else if (f.time_limit) {
    mms::set_time_budget(o.search, *f.time_limit);
  }
  if (f.time_limit) {
    if (!(*f.time_limit >= 0.0)) throw mms::InvalidInput("--time-limit must be >= 0");
    if (!f.deterministic) o.exact.time_limit = *f.time_limit;
  }
  if (f.deterministic) o.search.record_time = false;
  return o;
}

mms::Sample make_sample(const mms::Instance& inst, const CommonFlags& f) {
  if (f.sample_size < 0) throw mms::InvalidInput("--sample-size must be >= 0");
  if (f.sample_size == 0) return mms::Sample::nominal(inst.num_vehicles());
  return mms::sample(inst, f.sample_size, f.sample_seed, f.forbid_low_risk);
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw mms::InvalidInput("cannot write " + p.string());
  return out;
}

// Writes to `path`, or to stdout when the path is empty.
template <typename F>
void emit(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
  } else {
    std::ofstream out = open_out(path);
    write(out);
  }
}

mms::InstanceClass parse_class(const std::string& s) {
  if (s == "small") return mms::InstanceClass::kSmall;
  if (s == "medium") return mms::InstanceClass::kMedium;
  if (s == "large") return mms::InstanceClass::kLarge;
  throw mms::InvalidInput("unknown class '" + s + "' (expected small, medium or large)");
}

std::vector<std::int64_t> parse_list(const std::string& s) {
  std::vector<std::int64_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stoll(item));
    } catch (const std::exception&) {
      throw mms::InvalidInput("bad entry '" + item + "' in list '" + s + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

struct GenerateFlags {
  std::string cls = "small";
  int count = 30;
  std::uint64_t seed = 1;
  std::string out = "instances";
  std::vector<int> vehicles;
};

int cmd_generate(const GenerateFlags& f) {
  if (f.count < 0) throw mms::InvalidInput("--count must be >= 0");
  const mms::InstanceClass cls = parse_class(f.cls);
  const std::vector<int> sizes = f.vehicles.empty() ? mms::GeneratorConfig::class_sizes(cls) : f.vehicles;
  if (f.count == 0) return kExitOk;
  fs::create_directories(f.out);
  int written = 0;
  for (int n : sizes) {
    for (int i = 0; i < f.count; ++i) {
      const std::uint64_t s = mms::derive_seed(mms::derive_seed(f.seed, n), i);
      const mms::Instance inst = mms::generate(mms::GeneratorConfig::preset(cls, n, s));
      char name[64];
      std::snprintf(name, sizeof(name), "%s_v%d_%02d.yaml", f.cls.c_str(), n, i + 1);
      mms::save(inst, fs::path(f.out) / name);
      ++written;
    }
  }
  std::cerr << "wrote " << written << " instances to " << f.out << "\n";
  return kExitOk;
}

struct SolveFlags {
  CommonFlags common;
  std::string instance;
  std::string out;
  std::string record;
  std::string history;
  std::string log;
  std::string trace;
};

int cmd_solve(const SolveFlags& f) {
  const mms::Instance inst = mms::load(f.instance);
  const mms::RunOptions opt = run_options(f.common);
  const mms::Sample smp = make_sample(inst, f.common);
  mms::RunOutput res = mms::run_method(inst, smp, opt);
  if (f.common.deterministic) mms::strip_timing(res);

  if (!f.out.empty()) {
    std::ofstream out = open_out(f.out);
    out << mms::serialize(mms::SolutionFile{res.record.instance_id, smp.seed, res.sequence});
  }
  emit(f.record, [&](std::ostream& os) { mms::write_run_records(os, {res.record}); });
  if (!f.history.empty()) {
    emit(f.history, [&](std::ostream& os) { mms::write_history(os, res.history); });
  }
  if (!f.log.empty()) {
    emit(f.log, [&](std::ostream& os) { mms::write_solver_log(os, res.exact_stats); });
  }
  if (!f.trace.empty()) {
    emit(f.trace, [&](std::ostream& os) {
      mms::write_greedy_trace(os, mms::construct(inst, opt.seed).trace);
    });
  }
  return res.time_limit_hit ? kExitTimeLimit : kExitOk;
}

struct AssessFlags {
  CommonFlags common;
  std::string instance;
  std::string solution;
  int replications = 30;
  std::int64_t mrp_sample_size = 5000;
  double alpha = 0.05;
  std::uint64_t mrp_seed = 3;
  bool integrated = false;
  std::string n_list = "100,200,500,1000";
  double epsilon = 0.01;
  std::string out;
  std::string solution_out;
};

mms::SaaSolver make_solver(const mms::RunOptions& opt) {
  switch (opt.method) {
    case mms::Method::kLShaped: return mms::exact_solver(opt.exact);
    case mms::Method::kEnumeration: return mms::enumeration_solver();
    case mms::Method::kTabu: return mms::tabu_solver(opt.search);
    default: throw mms::InvalidInput("assess supports --method lshaped, enum or ts");
  }
}

int cmd_assess(const AssessFlags& f) {
  const mms::Instance inst = mms::load(f.instance);
  mms::RunOptions opt = run_options(f.common);
  if (f.common.method == "ts" && !f.common.iters && !f.common.time_limit && !f.common.deterministic) {
    // Full default budgets per replication would take hours.
    mms::set_iteration_budget(opt.search, kDefaultDeterministicIters);
  }
  const mms::SaaSolver solver = make_solver(opt);
  mms::MRPOptions mo;
  mo.replications = f.replications;
  mo.sample_size = f.mrp_sample_size;
  mo.alpha = f.alpha;
  mo.seed = f.mrp_seed;
  mo.forbid_low_risk_failures = f.common.forbid_low_risk;
  mo.regenerative = !f.common.non_regenerative;

  if (f.integrated) {
    double eps = f.epsilon;
    const mms::IntegratedResult r = mms::mrp_integrated_saa(inst, parse_list(f.n_list), eps, mo, solver);
    emit(f.out, [&](std::ostream& os) {
      os << "n,candidate_objective,normalized_bound,accepted\n";
      for (const auto& row : r.trace) {
        os << row.n << "," << mms::format_fixed4(row.candidate_objective) << ","
           << mms::format_fixed4(row.bound) << "," << (row.accepted ? 1 : 0) << "\n";
      }
    });
    if (!f.solution_out.empty()) {
      std::ofstream out = open_out(f.solution_out);
      out << mms::serialize(mms::SolutionFile{mms::instance_id(inst),
                                              mms::derive_seed(mo.seed, 1000 + r.trace.size() - 1),
                                              r.sequence});
    }
    std::cerr << (r.met ? "threshold met" : "threshold not met") << " at N=" << r.stop_n
              << ", bound " << mms::format_fixed4(r.gap) << "\n";
    return kExitOk;
  }

  if (f.solution.empty()) throw mms::InvalidInput("assess needs --solution (or --integrated)");
  const mms::SolutionFile sol = mms::load_solution(f.solution);
  if (sol.instance_id != mms::instance_id(inst)) {
    throw mms::InvalidInput("solution was computed for instance " + sol.instance_id +
                            ", not " + mms::instance_id(inst));
  }
  const mms::MRPReport rep = mms::mrp(inst, sol.sequence, mo, solver);
  emit(f.out, [&](std::ostream& os) { mms::write_mrp_csv(os, rep); });
  if (!rep.complete) {
    std::cerr << "error: " << rep.error << " (partial report written)\n";
    return kExitError;
  }
  return kExitOk;
}

struct CompareFlags {
  CommonFlags common;
  std::vector<std::string> instances;
  std::int64_t eval_size = 10000;
  std::uint64_t eval_seed = 2;
  std::string out;
};

int cmd_compare(const CompareFlags& f) {
  mms::CompareOptions co;
  co.run = run_options(f.common);
  co.sample_size = f.common.sample_size;
  co.sample_seed = f.common.sample_seed;
  co.forbid_low_risk_failures = f.common.forbid_low_risk;
  co.eval_size = f.eval_size;
  co.eval_seed = f.eval_seed;
  if (co.sample_size < 1) throw mms::InvalidInput("compare needs --sample-size >= 1");
  std::vector<mms::CompareResult> rows;
  double sum = 0.0;
  for (const std::string& path : f.instances) {
    rows.push_back(mms::compare(mms::load(path), co));
    sum += rows.back().improvement_pct;
  }
  emit(f.out, [&](std::ostream& os) { mms::write_compare_csv(os, rows); });
  if (!rows.empty()) {
    std::cerr << "mean improvement " << mms::format_fixed4(sum / rows.size()) << "% over "
              << rows.size() << " instances\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-model sequencing under stochastic vehicle failures"};
  app.require_subcommand(1);

  GenerateFlags gen;
  CLI::App* g = app.add_subcommand("generate", "write random instances of a size class");
  g->add_option("--class", gen.cls, "small, medium or large")->capture_default_str();
  g->add_option("--count", gen.count, "instances per size")->capture_default_str();
  g->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  g->add_option("--out", gen.out, "output directory")->capture_default_str();
  g->add_option("--vehicles", gen.vehicles, "override the class's vehicle counts");

  SolveFlags solve;
  CLI::App* s = app.add_subcommand("solve", "solve the SAA problem on one instance");
  s->add_option("--instance", solve.instance, "instance file")->required();
  add_common(s, solve.common);
  s->add_option("--out", solve.out, "solution file");
  s->add_option("--record", solve.record, "run record CSV (default: stdout)");
  s->add_option("--history", solve.history, "ts/sa objective history CSV");
  s->add_option("--log", solve.log, "lshaped node log CSV");
  s->add_option("--trace", solve.trace, "greedy construction trace CSV");

  AssessFlags assess;
  CLI::App* a = app.add_subcommand("assess", "bound the optimality gap of a solution (MRP)");
  a->add_option("--instance", assess.instance, "instance file")->required();
  a->add_option("--solution", assess.solution, "solution file");
  add_common(a, assess.common, false);
  assess.common.method = "enum";
  a->get_option("--method")->default_str("enum");
  a->add_option("--replications", assess.replications, "M")->capture_default_str();
  a->add_option("--mrp-sample-size", assess.mrp_sample_size, "N per replication")
      ->capture_default_str();
  a->add_option("--alpha", assess.alpha)->capture_default_str();
  a->add_option("--mrp-seed", assess.mrp_seed, "seed of the replication samples")
      ->capture_default_str();
  a->add_flag("--integrated", assess.integrated, "grow N until the bound reaches --epsilon");
  a->add_option("--n-list", assess.n_list, "ascending sample sizes for --integrated")
      ->capture_default_str();
  a->add_option("--epsilon", assess.epsilon, "normalised bound threshold for --integrated")
      ->capture_default_str();
  a->add_option("--out", assess.out, "report CSV (default: stdout)");
  a->add_option("--solution-out", assess.solution_out, "accepted solution for --integrated");

  CompareFlags cmp;
  CLI::App* c = app.add_subcommand("compare", "no-failure solution versus SAA solution");
  c->add_option("--instance", cmp.instances, "instance file(s)")->required();
  add_common(c, cmp.common);
  c->add_option("--eval-size", cmp.eval_size, "out-of-sample size when |V| > 12")
      ->capture_default_str();
  c->add_option("--eval-seed", cmp.eval_seed)->capture_default_str();
  c->add_option("--out", cmp.out, "comparison CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*s) return cmd_solve(solve);
    if (*a) return cmd_assess(assess);
    if (*c) return cmd_compare(cmp);
  } catch (const mms::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const mms::GuardViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitGuard;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
