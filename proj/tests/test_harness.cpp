#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include <netband/harness.hpp>

using namespace netband;

namespace {

// Plays one fixed profile forever.
class FixedPolicy : public Policy {
 public:
  FixedPolicy(int units, int arms, std::int64_t horizon, std::uint64_t profile)
      : Policy(units, arms, horizon), profile_(profile) {}
  std::string name() const override { return "fixed"; }

 protected:
  std::uint64_t choose() override {
    phase_ = Phase::commit;
    return profile_;
  }
  void update(std::uint64_t, const RewardObservation&) override {}

 private:
  std::uint64_t profile_;
};

ExperimentConfig small_config(PolicyKind policy) {
  ExperimentConfig c;
  c.units = 5;
  c.sparsity = 2;
  c.policy = policy;
  c.reps = 3;
  c.base_seed = 17;
  return c;
}

}  // namespace

TEST(RunPolicy, OraclePolicyHasZeroRegret) {
  const auto env = Environment::generate(6, 3, 2, 5);
  FixedPolicy p(6, 2, 500, env.optimal);
  RandomEngine rng(1);
  const auto tr = run_policy(env, p, NoiseSpec{}, rng, 500, 7);
  for (double c : tr.cum) EXPECT_EQ(c, 0.0);
  EXPECT_EQ(tr.rounds.back(), 500);
}

TEST(RunPolicy, WorstPolicyAccumulatesTheFullGap) {
  const auto env = Environment::generate(6, 3, 2, 5);
  const auto worst = static_cast<std::uint64_t>(
      std::min_element(env.mean_table.begin(), env.mean_table.end()) - env.mean_table.begin());
  FixedPolicy p(6, 2, 1000, worst);
  RandomEngine rng(1);
  const auto tr = run_policy(env, p, NoiseSpec{}, rng, 1000, 1);
  const double gap = env.optimal_value - env.mean_table[worst];
  EXPECT_NEAR(tr.cum.back(), 1000 * gap, 1e-9);
  EXPECT_EQ(tr.non_committed_rounds, 0);
}

TEST(Environment, OracleMatchesOptimalAction) {
  const auto env = Environment::generate(7, 3, 2, 11);
  const auto [a, v] = optimal_action(env.model);
  EXPECT_EQ(env.optimal, a.index());
  EXPECT_EQ(env.optimal_value, v);
}

TEST(RunOnce, Deterministic) {
  auto c = small_config(PolicyKind::etc_known);
  c.record_every = 1;
  const auto a = run_once(c, 1), b = run_once(c, 1);
  EXPECT_EQ(a.cum, b.cum);
  EXPECT_EQ(a.rounds, b.rounds);
  EXPECT_EQ(a.meta.seed, b.meta.seed);
  const auto other = run_once(c, 2);
  EXPECT_NE(a.meta.seed, other.meta.seed);
  EXPECT_NE(a.cum, other.cum);
}

TEST(RunOnce, SeedDerivationIsDocumented) {
  auto c = small_config(PolicyKind::ucb);
  EXPECT_EQ(run_once(c, 2).meta.seed, mix_seed(17, 2));
}

TEST(RunOnce, RegretInvariants) {
  for (auto kind : {PolicyKind::etc_known, PolicyKind::etc_unknown, PolicyKind::global_etc, PolicyKind::seq_elim,
                    PolicyKind::ucb}) {
    auto c = small_config(kind);
    c.record_every = 1;
    const auto tr = run_once(c, 0);
    ASSERT_EQ(tr.rounds.size(), 320U);
    double sum = 0.0;
    for (std::size_t k = 0; k < tr.inst.size(); ++k) {
      EXPECT_GE(tr.inst[k], -1e-12);
      sum += tr.inst[k];
      EXPECT_NEAR(tr.cum[k], sum, 1e-9);
      if (k > 0) {
        EXPECT_GE(tr.cum[k], tr.cum[k - 1]);
      }
    }
  }
}

TEST(RunOnce, ThinningConservesTotals) {
  auto c = small_config(PolicyKind::etc_known);
  c.record_every = 1;
  const auto full = run_once(c, 0);
  c.record_every = 7;
  const auto thin = run_once(c, 0);
  EXPECT_EQ(thin.cum.back(), full.cum.back());
  EXPECT_EQ(thin.total_regret, full.total_regret);
  EXPECT_EQ(thin.rounds.back(), 320);
  for (std::size_t k = 0; k + 1 < thin.rounds.size(); ++k) {
    EXPECT_EQ(thin.rounds[k] % 7, 0);
    EXPECT_EQ(thin.cum[k], full.cum[static_cast<std::size_t>(thin.rounds[k] - 1)]);
  }
}

TEST(RunOnce, ExplorationAccounting) {
  for (auto kind : {PolicyKind::etc_known, PolicyKind::etc_unknown, PolicyKind::global_etc}) {
    for (auto mode : {ModeKind::cv, ModeKind::theoretical}) {
      auto c = small_config(kind);
      c.mode = mode;
      const auto tr = run_once(c, 0);
      ASSERT_TRUE(tr.meta.diagnostics.exploration_rounds);
      EXPECT_EQ(tr.non_committed_rounds, *tr.meta.diagnostics.exploration_rounds);
    }
  }
}

TEST(RunOnce, DefaultsFromConfig) {
  auto c = small_config(PolicyKind::ucb);
  EXPECT_EQ(c.horizon_value(), 320);
  EXPECT_EQ(c.stride(), 1);
  c.units = 9;
  EXPECT_EQ(c.horizon_value(), 5120);
  EXPECT_EQ(c.stride(), 5);
  c.reps = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(RunOnce, ErrorsCarryRunContext) {
  auto c = small_config(PolicyKind::etc_known);
  c.mode = ModeKind::fixed;
  c.fixed_exploration = 2;
  c.horizon = 6;
  try {
    run_once(c, 3);
    FAIL() << "expected failure";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("etc-known N=5 rep 3"), std::string::npos) << e.what();
  }
}

TEST(RunRepeated, SingleRep) {
  auto c = small_config(PolicyKind::ucb);
  c.reps = 1;
  const auto r = run_repeated(c);
  EXPECT_EQ(r.mean_cum, r.traces[0].cum);
  for (double s : r.std_cum) EXPECT_EQ(s, 0.0);
}

TEST(RunRepeated, IdenticalSeedsGiveZeroSpread) {
  auto c = small_config(PolicyKind::etc_known);
  c.reps = 5;
  c.same_seed_all_reps = true;
  const auto r = run_repeated(c);
  for (double s : r.std_cum) EXPECT_EQ(s, 0.0);
}

TEST(RunRepeated, AggregateIsPointwiseMeanAndSampleStd) {
  auto c = small_config(PolicyKind::seq_elim);
  const auto r = run_repeated(c);
  for (std::size_t k = 0; k < r.rounds.size(); k += 13) {
    double m = 0.0;
    for (const auto& t : r.traces) m += t.cum[k];
    m /= 3.0;
    double ss = 0.0;
    for (const auto& t : r.traces) ss += (t.cum[k] - m) * (t.cum[k] - m);
    EXPECT_NEAR(r.mean_cum[k], m, 1e-12);
    EXPECT_NEAR(r.std_cum[k], std::sqrt(ss / 2.0), 1e-12);
  }
}

TEST(RunRepeated, ThreadCountDoesNotChangeResults) {
  auto c = small_config(PolicyKind::etc_known);
  ::setenv("NETBAND_THREADS", "1", 1);
  const auto a = run_repeated(c);
  ::setenv("NETBAND_THREADS", "3", 1);
  const auto b = run_repeated(c);
  ::unsetenv("NETBAND_THREADS");
  EXPECT_EQ(a.mean_cum, b.mean_cum);
  EXPECT_EQ(a.std_cum, b.std_cum);
}

TEST(RunRepeated, FixedEnvironmentSharesTheInstance) {
  auto mean_table = [](const ExperimentConfig& c, int rep) { return make_environment(c, rep).mean_table; };
  auto c = small_config(PolicyKind::ucb);
  c.fixed_environment = true;
  EXPECT_EQ(mean_table(c, 0), mean_table(c, 1));
  EXPECT_EQ(mean_table(c, 0), mean_table(c, 2));
  c.fixed_environment = false;
  EXPECT_NE(mean_table(c, 0), mean_table(c, 1));
  // the noise still differs between reps of a fixed environment
  c.fixed_environment = true;
  const auto r = run_repeated(c);
  EXPECT_NE(r.traces[0].cum, r.traces[1].cum);
}

TEST(Sweep, SingleValueEqualsRunRepeated) {
  auto c = small_config(PolicyKind::etc_known);
  const auto s = sweep(c, SweepAxis::units, {"5"});
  const auto r = run_repeated(c);
  ASSERT_EQ(s.points.size(), 1U);
  EXPECT_EQ(s.points[0].mean_final, r.final_mean());
  EXPECT_EQ(s.points[0].std_final, r.final_std());
}

TEST(Sweep, UcbRegretIncreasesWithN) {
  auto c = small_config(PolicyKind::ucb);
  c.reps = 5;
  const auto s = sweep(c, SweepAxis::units, {"5", "6", "7", "8", "9"});
  ASSERT_TRUE(s.all_ok());
  for (std::size_t i = 1; i < s.points.size(); ++i) EXPECT_GT(s.points[i].mean_final, s.points[i - 1].mean_final);
}

TEST(Sweep, HorizonFollowsN) {
  const auto c = sweep_point_config(small_config(PolicyKind::ucb), SweepAxis::units, "7", false);
  EXPECT_EQ(c.horizon_value(), 1280);
  auto pinned = small_config(PolicyKind::ucb);
  pinned.horizon = 100;
  EXPECT_EQ(sweep_point_config(pinned, SweepAxis::units, "7", true).horizon_value(), 100);
}

TEST(Sweep, MalformedValuesFailBeforeAnyRun) {
  const auto c = small_config(PolicyKind::ucb);
  EXPECT_THROW(sweep(c, SweepAxis::units, {"5", "6.5"}), std::invalid_argument);
  EXPECT_THROW(sweep(c, SweepAxis::units, {"5", "x"}), std::invalid_argument);
  EXPECT_THROW(sweep(c, SweepAxis::policy, {"ucb", "nope"}), std::invalid_argument);
  EXPECT_THROW(sweep(c, SweepAxis::units, {}), std::invalid_argument);
}

TEST(Sweep, PointFailuresAreRecorded) {
  auto c = small_config(PolicyKind::ucb);
  c.reps = 1;
  const auto s = sweep(c, SweepAxis::sparsity, {"2", "9", "3"});  // s=9 > N=5
  ASSERT_EQ(s.points.size(), 3U);
  EXPECT_FALSE(s.points[0].error);
  EXPECT_TRUE(s.points[1].error);
  EXPECT_FALSE(s.points[2].error);
  EXPECT_FALSE(s.all_ok());
}

TEST(Sweep, PolicyAxisKeepsOrder) {
  auto c = small_config(PolicyKind::ucb);
  c.reps = 1;
  const auto s = sweep(c, SweepAxis::policy, {"ucb", "etc-known", "seq-elim"});
  ASSERT_EQ(s.points.size(), 3U);
  EXPECT_EQ(s.points[0].policy, "ucb");
  EXPECT_EQ(s.points[1].policy, "etc-known");
  EXPECT_EQ(s.points[2].policy, "seq-elim");
}

TEST(Reproduction, KnownInterferenceBeatsUcbAtNineUnits) {
  ExperimentConfig c;
  c.units = 9;
  c.sparsity = 4;
  c.base_seed = 42;
  c.policy = PolicyKind::etc_known;
  const auto etc = run_repeated(c);
  c.policy = PolicyKind::ucb;
  const auto ucb = run_repeated(c);
  EXPECT_LT(etc.final_mean(), ucb.final_mean());
  int wins = 0;
  for (std::size_t r = 0; r < 5; ++r) wins += ucb.traces[r].cum.back() > etc.traces[r].cum.back();
  EXPECT_GE(wins, 4);
}
