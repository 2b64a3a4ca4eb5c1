#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "support.hpp"

using namespace mms;
using namespace mms::testing;

namespace {

// Vehicles 0..n-1 with the given EV flags, all on one neutral station.
Instance ev_layout(const std::vector<bool>& ev) {
  Instance inst = single_station(std::vector<int>(ev.size(), 7));
  for (std::size_t v = 0; v < ev.size(); ++v) inst.vehicles[v].is_ev = ev[v];
  return inst;
}

}  // namespace

TEST(Apply, InversionOfWholeSequence) {
  const Sequence s{{0, 1, 2, 3, 4}};
  EXPECT_EQ(apply(s, {MoveKind::kInversion, 0, 4}).order, (std::vector<int>{4, 3, 2, 1, 0}));
}

TEST(Apply, SwapIsAnInvolution) {
  Rng rng(1);
  const Sequence s = random_sequence(9, rng);
  for (int a = 0; a < 9; ++a) {
    for (int b = a + 1; b < 9; ++b) {
      const Move m{MoveKind::kSwap, a, b};
      EXPECT_EQ(apply(apply(s, m), m), s);
    }
  }
}

TEST(Apply, Insertions) {
  const Sequence s{{0, 1, 2, 3, 4, 5}};  // a..f
  EXPECT_EQ(apply(s, {MoveKind::kInsertForward, 1, 4}).order, (std::vector<int>{0, 2, 3, 4, 1, 5}));
  EXPECT_EQ(apply(s, {MoveKind::kInsertBackward, 1, 4}).order, (std::vector<int>{0, 4, 1, 2, 3, 5}));
}

TEST(Apply, AlwaysAPermutation) {
  Rng rng(2);
  Sequence s = random_sequence(12, rng);
  for (int i = 0; i < 1000; ++i) {
    s = apply(s, random_move(12, rng));
    ASSERT_TRUE(s.is_permutation_of(12));
  }
}

TEST(Apply, RejectsBadPositions) {
  EXPECT_THROW(apply(Sequence::identity(4), {MoveKind::kSwap, 2, 2}), ContractViolation);
  EXPECT_THROW(apply(Sequence::identity(4), {MoveKind::kSwap, 1, 4}), ContractViolation);
}

TEST(IsTabu, NoEvsNothingTabu) {
  const Instance inst = ev_layout(std::vector<bool>(7, false));
  const Sequence s = Sequence::identity(7);
  for (int k = 0; k < 4; ++k) {
    for (int a = 0; a < 7; ++a) {
      for (int b = a + 1; b < 7; ++b) EXPECT_FALSE(is_tabu(inst, s, {static_cast<MoveKind>(k), a, b}));
    }
  }
}

TEST(IsTabu, SwapNextToEv) {
  // [EV, n, n, EV, n]: moving the first EV to position 3 puts it beside the other.
  const Instance inst = ev_layout({true, false, false, true, false});
  EXPECT_TRUE(is_tabu(inst, Sequence::identity(5), {MoveKind::kSwap, 0, 2}));
}

TEST(IsTabu, InversionSecondRule) {
  // non-EV at t1, EV at t2, EV left of t1.
  const Instance inst = ev_layout({true, false, false, true, false});
  EXPECT_TRUE(is_tabu(inst, Sequence::identity(5), {MoveKind::kInversion, 1, 3}));
}

// Exhaustive over all EV layouts without adjacent EVs for |V| <= 8: a move
// that is not tabu never produces adjacent EVs.
TEST(IsTabu, SoundOnAllSmallLayouts) {
  std::int64_t checked = 0;
  for (int n = 2; n <= 8; ++n) {
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      std::vector<bool> ev(n);
      for (int v = 0; v < n; ++v) ev[v] = (mask >> v) & 1u;
      const Instance inst = ev_layout(ev);
      const Sequence s = Sequence::identity(n);
      if (has_adjacent_evs(inst, s)) continue;
      for (int k = 0; k < 4; ++k) {
        for (int a = 0; a < n; ++a) {
          for (int b = a + 1; b < n; ++b) {
            const Move m{static_cast<MoveKind>(k), a, b};
            if (is_tabu(inst, s, m)) continue;
            ++checked;
            ASSERT_FALSE(has_adjacent_evs(inst, apply(s, m)))
                << "n=" << n << " mask=" << mask << " op=" << k << " t1=" << a << " t2=" << b;
          }
        }
      }
    }
  }
  EXPECT_GT(checked, 5000);
}

TEST(Search, StartAtOptimumStaysOptimal) {
  const Instance inst = small_instance(7, 3);
  const ScenarioSet set = ScenarioSet::from_probabilities(enumerate_all(inst));
  const EnumerationResult opt = enumerate_optimal(inst, set);
  SearchParams p;
  set_iteration_budget(p, 2000);
  const SearchResult r = search(inst, set, opt.sequence, p);
  EXPECT_EQ(r.objective, opt.objective);
}

TEST(Search, ZeroBudgetReturnsStart) {
  const Instance inst = small_instance(9, 4);
  const Sample smp = sample(inst, 100, 1);
  const Sequence start = construct(inst).sequence;
  SearchParams p;
  p.tau_one = p.tau_full = 0.0;
  EXPECT_EQ(search(inst, smp, start, p).best, start);
  set_iteration_budget(p, 0);
  const SearchResult r = search(inst, smp, start, p);
  EXPECT_EQ(r.best, start);
  EXPECT_EQ(r.iterations, 0);
}

TEST(Search, NotWorseThanStartAndMonotone) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Instance inst = generate(GeneratorConfig::preset(InstanceClass::kMedium, 40, seed));
    const Sample smp = sample(inst, 100, seed);
    SearchParams p;
    set_iteration_budget(p, 3000);
    p.seed = seed;
    p.history_every = 1;
    p.check_every = 50;
    const Sequence start = construct(inst, seed).sequence;
    const SearchResult r = search(inst, smp, start, p);
    EXPECT_LE(r.objective, evaluate_expected(inst, start, smp));
    EXPECT_EQ(r.objective, evaluate_expected(inst, r.best, smp));
    EXPECT_FALSE(has_adjacent_evs(inst, r.best));
    double last = 1e300;
    int phase = 0;
    for (const HistoryRow& h : r.history) {
      if (h.phase != phase) {
        phase = h.phase;
        last = 1e300;
      }
      EXPECT_LE(h.objective, last);
      last = h.objective;
    }
  }
}

TEST(Search, ReproducibleAndWorkerIndependent) {
  const Instance inst = generate(GeneratorConfig::preset(InstanceClass::kMedium, 40, 9));
  const Sample smp = sample(inst, 200, 9);
  SearchParams p;
  set_iteration_budget(p, 2000);
  p.seed = 17;
  p.record_time = false;
  const Sequence start = construct(inst, 17).sequence;
  const SearchResult a = search(inst, smp, start, p);
  p.workers = 3;
  const SearchResult b = search(inst, smp, start, p);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.objective, b.objective);
  std::ostringstream ha, hb;
  write_history(ha, a.history);
  write_history(hb, b.history);
  EXPECT_EQ(ha.str(), hb.str());
}

TEST(Search, BadParams) {
  SearchParams p;
  p.operator_weights = {0.5, 0.5, 0.5, 0.0};
  EXPECT_FALSE(validate(p).empty());
  const Instance inst = small_instance(7, 1);
  EXPECT_THROW(search(inst, Sample::nominal(7), construct(inst).sequence, p), InvalidInput);
  EXPECT_THROW(search(inst, Sample::nominal(7), Sequence::identity(6), SearchParams{}), InvalidInput);
}

TEST(Annealing, ColdBehavesAsDescent) {
  const Instance inst = generate(GeneratorConfig::preset(InstanceClass::kMedium, 40, 5));
  const Sample smp = sample(inst, 50, 5);
  SearchParams p;
  set_iteration_budget(p, 2000);
  p.history_every = 1;
  SAParams sa;
  sa.t_init = 1e-12;
  const SearchResult r = simulated_annealing(inst, smp, construct(inst).sequence, sa, p);
  double last = 1e300;
  int phase = 0;
  for (const HistoryRow& h : r.history) {
    if (h.phase != phase) {
      phase = h.phase;
      last = 1e300;
    }
    EXPECT_LE(h.objective, last);
    last = h.objective;
  }
}

TEST(Annealing, BadParams) {
  const Instance inst = small_instance(7, 1);
  SAParams sa;
  sa.alpha = 1.0;
  EXPECT_THROW(simulated_annealing(inst, Sample::nominal(7), construct(inst).sequence, sa, {}), InvalidInput);
}

// Paired runs: same instance, seeds and budgets for both methods.
TEST(Annealing, TabuMeanNotWorse) {
  const Instance inst = generate(GeneratorConfig::preset(InstanceClass::kMedium, 40, 21));
  const Sample smp = sample(inst, 100, 21);
  double ts = 0.0, sa = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SearchParams p;
    set_iteration_budget(p, 1500);
    p.seed = seed;
    const Sequence start = construct(inst, seed).sequence;
    ts += search(inst, smp, start, p).objective;
    SAParams a;
    a.seed = seed;
    sa += simulated_annealing(inst, smp, start, a, p).objective;
  }
  EXPECT_LE(ts / 30.0, sa / 30.0);
}
