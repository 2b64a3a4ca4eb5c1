#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace mms;
using namespace mms::testing;

TEST(TQuantile, KnownValues) {
  EXPECT_NEAR(t_quantile(0.05, 29), 1.699127, 1e-6);
  EXPECT_NEAR(t_quantile(0.05, 1e6), 1.644854, 1e-4);
  EXPECT_NEAR(t_quantile(0.025, 9), 2.262157, 1e-6);
  EXPECT_EQ(t_quantile(0.5, 5), 0.0);
}

TEST(TQuantile, DomainErrors) {
  EXPECT_THROW(t_quantile(0.0, 5), InvalidInput);
  EXPECT_THROW(t_quantile(1.0, 5), InvalidInput);
  EXPECT_THROW(t_quantile(0.05, 0.5), InvalidInput);
}

TEST(MrpReport, FinalizeFormula) {
  MRPReport r;
  r.alpha = 0.05;
  const double gaps[] = {0.0, 1.0, 2.0, 0.5};
  const double zs[] = {10.0, 12.0, 8.0, 10.0};
  for (int m = 0; m < 4; ++m) {
    MRPReplication row;
    row.m = m + 1;
    row.z = zs[m];
    row.gap = gaps[m];
    r.rows.push_back(row);
  }
  r.finalize();
  const double mean = 3.5 / 4.0;
  double var = 0.0;
  for (double g : gaps) var += (g - mean) * (g - mean);
  var /= 3.0;
  EXPECT_DOUBLE_EQ(r.mean_gap, mean);
  EXPECT_DOUBLE_EQ(r.gap_variance, var);
  EXPECT_DOUBLE_EQ(r.mean_z, 10.0);
  const double bound = mean + t_quantile(0.05, 3) * std::sqrt(var) / 2.0;
  EXPECT_NEAR(r.bound, bound, 1e-12);
  EXPECT_NEAR(r.normalized_bound, bound / 10.0, 1e-12);
  EXPECT_FALSE(r.unnormalized);
}

TEST(MrpReport, AllZeroGapsGiveZeroBound) {
  MRPReport r;
  for (int m = 0; m < 5; ++m) r.rows.push_back({m + 1, 0, 3.0, 3.0, 0.0});
  r.finalize();
  EXPECT_EQ(r.bound, 0.0);
  EXPECT_EQ(r.normalized_bound, 0.0);
}

TEST(Mrp, ExactSolverGapsNonNegative) {
  const Instance inst = small_instance(7, 1);
  const Sequence cand = construct(inst).sequence;
  MRPOptions o;
  o.replications = 5;
  o.sample_size = 50;
  o.seed = 4;
  const MRPReport r = mrp(inst, cand, o, exact_solver());
  ASSERT_TRUE(r.complete) << r.error;
  ASSERT_EQ(r.rows.size(), 5u);
  for (const auto& row : r.rows) {
    EXPECT_GE(row.gap, -1e-6);
    EXPECT_NEAR(row.gap, row.z_hat - row.z, 1e-12);
  }
  EXPECT_GE(r.bound, r.mean_gap);
}

TEST(Mrp, ReplicationReproducibleAlone) {
  const Instance inst = small_instance(7, 2);
  const Sequence cand = construct(inst).sequence;
  MRPOptions o;
  o.replications = 4;
  o.sample_size = 40;
  o.seed = 11;
  const MRPReport r = mrp(inst, cand, o, enumeration_solver());
  ASSERT_TRUE(r.complete);
  const MRPReplication& third = r.rows[2];
  EXPECT_EQ(third.sample_seed, replication_seed(11, 2));
  const Sample s = sample(inst, 40, third.sample_seed);
  EXPECT_EQ(enumerate_optimal(inst, s).objective, third.z);
  EXPECT_EQ(evaluate_expected(inst, cand, s), third.z_hat);
}

TEST(Mrp, ZeroOverloadIsUnnormalized) {
  const Instance inst = single_station({7, 7, 7, 7});
  MRPOptions o;
  o.replications = 3;
  o.sample_size = 10;
  const MRPReport r = mrp(inst, Sequence::identity(4), o, enumeration_solver());
  EXPECT_TRUE(r.unnormalized);
  EXPECT_EQ(r.bound, 0.0);
  EXPECT_EQ(r.normalized_bound, 0.0);
}

TEST(Mrp, BadInput) {
  const Instance inst = small_instance(7, 1);
  MRPOptions o;
  o.replications = 1;
  EXPECT_THROW(mrp(inst, Sequence::identity(7), o, enumeration_solver()), InvalidInput);
  o.replications = 3;
  EXPECT_THROW(mrp(inst, Sequence::identity(6), o, enumeration_solver()), InvalidInput);
}

TEST(Mrp, SolverFailureMarksIncomplete) {
  const Instance inst = small_instance(10, 1);
  MRPOptions o;
  o.replications = 3;
  o.sample_size = 10;
  const MRPReport r = mrp(inst, Sequence::identity(10), o, enumeration_solver());
  EXPECT_FALSE(r.complete);
  EXPECT_FALSE(r.error.empty());
  EXPECT_TRUE(r.rows.empty());
}

TEST(Integrated, InfiniteEpsilonStopsAtFirst) {
  const Instance inst = small_instance(7, 3);
  MRPOptions o;
  o.replications = 3;
  o.sample_size = 30;
  const IntegratedResult r = mrp_integrated_saa(inst, {20, 40}, kInf, o, enumeration_solver());
  EXPECT_TRUE(r.met);
  EXPECT_EQ(r.stop_n, 20);
  EXPECT_EQ(r.trace.size(), 1u);
}

TEST(Integrated, RejectsUnorderedSizes) {
  const Instance inst = small_instance(7, 3);
  EXPECT_THROW(mrp_integrated_saa(inst, {40, 20}, 0.01, {}, enumeration_solver()), InvalidInput);
  EXPECT_THROW(mrp_integrated_saa(inst, {}, 0.01, {}, enumeration_solver()), InvalidInput);
}

TEST(Integrated, ZeroOverloadMeetsImmediately) {
  const Instance inst = single_station({7, 7, 7, 7});
  MRPOptions o;
  o.replications = 3;
  o.sample_size = 10;
  const IntegratedResult r = mrp_integrated_saa(inst, {10, 20}, 0.0, o, enumeration_solver());
  EXPECT_TRUE(r.met);
  EXPECT_EQ(r.gap, 0.0);
  EXPECT_EQ(r.stop_n, 10);
}

// Candidates that are optimal for a large sample are assessed as close to
// optimal.
TEST(DeskScale, SaaOptimalCandidatesHaveSmallBounds) {
  double sum = 0.0;
  const int count = 3;
  for (int i = 0; i < count; ++i) {
    const Instance inst = small_instance(7, derive_seed(90, i));
    const Sequence cand = enumerate_optimal(inst, sample(inst, 2000, derive_seed(91, i))).sequence;
    MRPOptions o;
    o.replications = 10;
    o.sample_size = 200;
    o.seed = derive_seed(92, i);
    const MRPReport r = mrp(inst, cand, o, enumeration_solver());
    ASSERT_TRUE(r.complete);
    sum += r.normalized_bound;
  }
  EXPECT_LT(sum / count, 0.05);
}

TEST(DeskScale, IntegratedUsuallyStopsAtFirstSize) {
  int first = 0;
  const int count = 4;
  for (int i = 0; i < count; ++i) {
    const Instance inst = small_instance(7, derive_seed(93, i));
    MRPOptions o;
    o.replications = 10;
    o.seed = derive_seed(94, i);
    const IntegratedResult r =
        mrp_integrated_saa(inst, {100, 200, 500, 1000}, 0.01, o, enumeration_solver());
    first += r.met && r.stop_n == 100;
  }
  EXPECT_GE(2 * first, count);
}

TEST(MrpCsv, Header) {
  MRPReport r;
  r.rows.push_back({1, 5, 2.0, 2.5, 0.5});
  r.rows.push_back({2, 6, 2.0, 2.0, 0.0});
  r.finalize();
  std::ostringstream os;
  write_mrp_csv(os, r);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("m,sample_seed,z,z_hat,gap,mean_gap,gap_variance,mean_z,t_value,bound,"
                    "normalized_bound,unnormalized\n",
                    0),
            0u);
  EXPECT_NE(s.find("\nall,"), std::string::npos);
}
