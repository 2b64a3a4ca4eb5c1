#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace mms;
using namespace mms::testing;
namespace fs = std::filesystem;

namespace {

struct Cli {
  int rc = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class HarnessTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mms_harness_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Cli run(const std::string& args) {
    const fs::path o = dir_ / "stdout.txt", e = dir_ / "stderr.txt";
    const std::string cmd =
        std::string(MMS_CLI_PATH) + " " + args + " > " + o.string() + " 2> " + e.string();
    const int status = std::system(cmd.c_str());
    Cli c;
    c.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    c.out = slurp(o);
    c.err = slurp(e);
    return c;
  }

  fs::path write_instance(const Instance& inst, const std::string& name) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << serialize(inst);
    return p;
  }

  fs::path dir_;
};

// Objective column of a one-row run record.
double record_objective(const std::string& csv) {
  std::istringstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  std::vector<std::string> h, r;
  std::string cell;
  for (std::istringstream hs(header); std::getline(hs, cell, ',');) h.push_back(cell);
  for (std::istringstream rs(row); std::getline(rs, cell, ',');) r.push_back(cell);
  for (std::size_t i = 0; i < h.size() && i < r.size(); ++i) {
    if (h[i] == "objective") return std::stod(r[i]);
  }
  return -1.0;
}

}  // namespace

TEST(Method, ParseRoundTrip) {
  for (Method m : {Method::kGreedy, Method::kTabu, Method::kAnnealing, Method::kLShaped,
                   Method::kEnumeration}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("simplex"), InvalidInput);
}

TEST(SolutionFileFormat, RoundTrip) {
  const SolutionFile s{"abc123", 42, Sequence{{3, 1, 0, 2}}};
  const SolutionFile back = parse_solution(serialize(s));
  EXPECT_EQ(back.instance_id, s.instance_id);
  EXPECT_EQ(back.sample_seed, 42u);
  EXPECT_EQ(back.sequence, s.sequence);
}

TEST(SolutionFileFormat, Errors) {
  EXPECT_THROW(parse_solution(""), ParseError);
  EXPECT_THROW(parse_solution("version: other\n"), ParseError);
  EXPECT_THROW(parse_solution("version: mms-solution/1\ninstance: x\nsample_seed: q\nsequence: 1\n"),
               ParseError);
  EXPECT_THROW(parse_solution("version: mms-solution/1\ninstance: x\nsample_seed: 1\nsequence: 1 b\n"),
               ParseError);
}

TEST(RunRecords, Header) {
  std::ostringstream os;
  write_run_records(os, {RunRecord{}});
  EXPECT_EQ(os.str().rfind("command,instance_id,seed,sample_seed,sample_size,solver,params,status,"
                           "objective,lower_bound,upper_bound,gap,wall_time,iterations\n",
                           0),
            0u);
}

TEST(CompareInProcess, IdenticalSolutionsGiveZero) {
  // No failures possible: the sample equals the nominal scenario.
  CompareOptions o;
  o.run.method = Method::kEnumeration;
  const CompareResult r = compare(greedy_example(), o);
  EXPECT_EQ(r.nominal_sequence, r.saa_sequence);
  EXPECT_EQ(r.improvement_pct, 0.0);
  EXPECT_EQ(r.evaluation, "exact");
  std::ostringstream os;
  write_compare_csv(os, {r});
  EXPECT_EQ(os.str().rfind("instance_id,method,evaluation,", 0), 0u);
}

TEST(CompareInProcess, SaaHelpsOnAverage) {
  double sum = 0.0;
  const int count = 5;
  for (int i = 0; i < count; ++i) {
    const Instance inst = small_instance(7, derive_seed(50, i));
    CompareOptions o;
    o.run.method = Method::kEnumeration;
    o.sample_seed = derive_seed(51, i);
    const CompareResult r = compare(inst, o);
    // The SAA optimum can lose out of sample only through sampling error.
    EXPECT_GE(r.nominal_in_sample, 0.0);
    sum += r.improvement_pct;
  }
  EXPECT_GT(sum / count, 0.0);
}

TEST_F(HarnessTest, GenerateSmallClass) {
  const Cli c = run("generate --class small --count 30 --seed 3 --out " + (dir_ / "gen").string());
  ASSERT_EQ(c.rc, 0) << c.err;
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "gen")) {
    ++files;
    std::vector<std::string> w;
    EXPECT_NO_THROW(load(e.path(), w)) << e.path();
  }
  EXPECT_EQ(files, 120);
}

TEST_F(HarnessTest, GenerateNothing) {
  const Cli c = run("generate --class small --count 0 --out " + (dir_ / "gen").string());
  EXPECT_EQ(c.rc, 0) << c.err;
  EXPECT_TRUE(!fs::exists(dir_ / "gen") || fs::is_empty(dir_ / "gen"));
}

TEST_F(HarnessTest, GreedyOnFixtureAndZeroIterationSearch) {
  const std::string inst = std::string(MMS_TEST_DATA) + "/greedy_example.yaml";
  const fs::path sol = dir_ / "g.sol";
  Cli c = run("solve --instance " + inst + " --method greedy --sample-size 0 --out " + sol.string());
  ASSERT_EQ(c.rc, 0) << c.err;
  EXPECT_EQ(load_solution(sol).sequence.order, (std::vector<int>{0, 2, 5, 1, 4, 3}));
  EXPECT_DOUBLE_EQ(record_objective(c.out), 3.0);
  const fs::path ts = dir_ / "t.sol";
  c = run("solve --instance " + inst + " --method ts --iters 0 --sample-size 0 --out " + ts.string());
  ASSERT_EQ(c.rc, 0) << c.err;
  EXPECT_EQ(load_solution(ts).sequence, load_solution(sol).sequence);
}

TEST_F(HarnessTest, ExactMethodsAgree) {
  const fs::path inst = write_instance(small_instance(7, 4), "i.yaml");
  const std::string common = "solve --instance " + inst.string() + " --sample-size 60 --sample-seed 5";
  const Cli e = run(common + " --method enum");
  const Cli l = run(common + " --method lshaped");
  ASSERT_EQ(e.rc, 0) << e.err;
  ASSERT_EQ(l.rc, 0) << l.err;
  EXPECT_DOUBLE_EQ(record_objective(e.out), record_objective(l.out));
}

TEST_F(HarnessTest, ExitCodes) {
  const fs::path big = write_instance(small_instance(10, 1), "big.yaml");
  EXPECT_EQ(run("solve --instance " + big.string() + " --no-such-flag").rc, 2);
  EXPECT_EQ(run("solve --instance " + (dir_ / "missing.yaml").string()).rc, 2);
  std::ofstream(dir_ / "bad.yaml") << "version: mms-instance/1\ncycle_time: [\n";
  EXPECT_EQ(run("solve --instance " + (dir_ / "bad.yaml").string()).rc, 2);
  EXPECT_EQ(run("solve --instance " + big.string() + " --method enum").rc, 3);
  EXPECT_EQ(run("solve --instance " + big.string() + " --method lshaped --time-limit 0").rc, 4);
}

TEST_F(HarnessTest, AssessRejectsForeignSolution) {
  const fs::path a = write_instance(small_instance(7, 1), "a.yaml");
  const fs::path b = write_instance(small_instance(7, 2), "b.yaml");
  const fs::path sol = dir_ / "a.sol";
  ASSERT_EQ(run("solve --instance " + a.string() + " --method greedy --out " + sol.string()).rc, 0);
  EXPECT_EQ(run("assess --instance " + b.string() + " --solution " + sol.string() +
                " --method enum --replications 3 --mrp-sample-size 20")
                .rc,
            2);
  const Cli ok = run("assess --instance " + a.string() + " --solution " + sol.string() +
                     " --method enum --replications 3 --mrp-sample-size 20");
  ASSERT_EQ(ok.rc, 0) << ok.err;
  EXPECT_EQ(ok.out.rfind("m,sample_seed,", 0), 0u);
}

TEST_F(HarnessTest, CompareZeroProbabilityFixture) {
  const std::string inst = std::string(MMS_TEST_DATA) + "/greedy_example.yaml";
  const Cli c = run("compare --instance " + inst + " --method enum");
  ASSERT_EQ(c.rc, 0) << c.err;
  std::istringstream in(c.out);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header.rfind("instance_id,method,evaluation,", 0), 0u);
  EXPECT_NE(row.find(",0.0000,"), std::string::npos) << row;
}
