#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <netband/environment.hpp>

using namespace netband;

namespace {

InterferenceGraph self_only(int units) {
  InterferenceGraph g{units, 1, {}};
  for (int n = 0; n < units; ++n) g.neighborhoods.push_back({n});
  return g;
}

SparseFourierModel constant_model(int units, int arms, double c) {
  SparseFourierModel m{self_only(units), arms, {}};
  for (int n = 0; n < units; ++n) m.coeffs.push_back({{0, c}});
  return m;
}

// Second argmax implementation: evaluate every r_n through the dense
// encoding and character products, no shared helpers beyond encoding.
std::pair<std::uint64_t, double> brute_force_optimum(const SparseFourierModel& m) {
  const std::uint64_t count = std::uint64_t{1} << m.width();
  std::uint64_t best = 0;
  double best_value = -1e300;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto v = boolean_encode(ActionProfile::from_index(i, m.units(), m.arms));
    double total = 0.0;
    for (const auto& unit : m.coeffs) {
      for (const auto& c : unit) total += c.value * character_value(SubsetMask(c.mask, m.width()), v);
    }
    total /= m.units();
    if (total > best_value + 1e-12) {
      best_value = total;
      best = i;
    }
  }
  return {best, best_value};
}

}  // namespace

TEST(GenerateGraph, SelfLoopsOnly) {
  const auto g = generate_graph(5, 1, 3);
  for (int n = 0; n < 5; ++n) EXPECT_EQ(g.neighborhoods[static_cast<std::size_t>(n)], (std::vector<int>{n}));
}

TEST(GenerateGraph, FullNeighborhoods) {
  const auto g = generate_graph(5, 5, 3);
  for (const auto& nb : g.neighborhoods) EXPECT_EQ(nb, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(GenerateGraph, SizeAndSelfMembership) {
  const auto g = generate_graph(9, 4, 42);
  g.validate();
  for (int n = 0; n < 9; ++n) {
    const auto& nb = g.neighborhoods[static_cast<std::size_t>(n)];
    EXPECT_EQ(nb.size(), 4U);
    EXPECT_TRUE(std::binary_search(nb.begin(), nb.end(), n));
  }
}

TEST(GenerateGraph, DeterministicAndSeedSensitive) {
  EXPECT_EQ(generate_graph(9, 4, 7).neighborhoods, generate_graph(9, 4, 7).neighborhoods);
  EXPECT_NE(generate_graph(9, 4, 7).neighborhoods, generate_graph(9, 4, 8).neighborhoods);
  EXPECT_THROW(generate_graph(3, 4, 1), std::invalid_argument);
  EXPECT_THROW(generate_graph(3, 0, 1), std::invalid_argument);
}

TEST(GenerateGraph, NeighborsRoughlyUniform) {
  // each other unit should be drawn about (s-1)/(N-1) of the time
  std::vector<int> hits(6, 0);
  const int trials = 3000;
  for (int t = 0; t < trials; ++t) {
    const auto g = generate_graph(6, 3, static_cast<std::uint64_t>(t));
    for (int m : g.neighborhoods[0]) ++hits[static_cast<std::size_t>(m)];
  }
  EXPECT_EQ(hits[0], trials);
  for (int m = 1; m < 6; ++m) EXPECT_NEAR(hits[static_cast<std::size_t>(m)] / double(trials), 0.4, 0.04);
}

TEST(BlockIndexSet, ContiguousBlocks) {
  InterferenceGraph g{3, 2, {{0, 2}, {1}, {2}}};
  // A = 4: two bits per unit; units 1 and 3 own positions {1,2} and {5,6}
  EXPECT_EQ(block_index_set(g, 0, 4), SubsetMask::of(6, {1, 2, 5, 6}));
  EXPECT_EQ(block_index_set(g, 1, 4).size(), 2);
}

TEST(GenerateModel, SingletonNeighborhood) {
  const auto m = generate_model(self_only(3), 2, 1);
  ASSERT_EQ(m.coeffs[0].size(), 2U);
  EXPECT_EQ(m.coeffs[0][0].mask, 0U);
  EXPECT_EQ(m.coeffs[0][0].value, 0.5);
  EXPECT_EQ(m.coeffs[0][1].mask, 1U);
}

TEST(GenerateModel, SixteenCoefficientsAtSparsityFour) {
  const auto m = generate_model(generate_graph(9, 4, 2), 2, 3);
  for (const auto& unit : m.coeffs) EXPECT_EQ(unit.size(), 16U);
  m.validate_support();
}

TEST(GenerateModel, RewardsInUnitInterval) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = generate_model(generate_graph(8, 3, seed), 2, seed + 100);
    const std::uint64_t count = profile_count(8, 2);
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto minus = minus_mask_of_index(i, m.width());
      for (int n = 0; n < 8; ++n) {
        const double r = unit_reward(m, n, minus);
        ASSERT_GE(r, 0.0);
        ASSERT_LE(r, 1.0);
      }
    }
  }
  const auto m4 = generate_model(generate_graph(4, 2, 5), 4, 6);
  for (std::uint64_t i = 0; i < profile_count(4, 4); ++i) {
    for (double r : true_reward(m4, ActionProfile::from_index(i, 4, 4))) {
      ASSERT_GE(r, 0.0);
      ASSERT_LE(r, 1.0);
    }
  }
}

TEST(TrueReward, ConstantModel) {
  const auto m = constant_model(3, 4, 0.3);
  for (std::uint64_t i = 0; i < 64; ++i) {
    for (double r : true_reward(m, ActionProfile::from_index(i, 3, 4))) EXPECT_EQ(r, 0.3);
  }
}

TEST(TrueReward, HandEvaluated) {
  SparseFourierModel m{self_only(2), 2, {}};
  m.coeffs = {{{0, 0.5}, {0b01, 0.5}}, {{0, 0.5}}};
  EXPECT_DOUBLE_EQ(true_reward(m, ActionProfile({2, 1}, 2))[0], 1.0);
  EXPECT_DOUBLE_EQ(true_reward(m, ActionProfile({2, 2}, 2))[0], 1.0);
  EXPECT_DOUBLE_EQ(true_reward(m, ActionProfile({1, 2}, 2))[0], 0.0);
}

TEST(TrueReward, MatchesTransformReconstruction) {
  const auto m = generate_model(generate_graph(5, 3, 9), 2, 10);
  for (int n = 0; n < 5; ++n) {
    std::vector<double> table;
    for (std::uint64_t i = 0; i < 32; ++i) table.push_back(true_reward(m, ActionProfile::from_index(i, 5, 2))[static_cast<std::size_t>(n)]);
    const auto c = fourier_transform(table, 5, 2);
    for (std::uint64_t i = 0; i < 32; ++i) EXPECT_NEAR(reconstruct(c, i), table[i], 1e-12);
    for (const auto& coef : m.coeffs[static_cast<std::size_t>(n)]) EXPECT_NEAR(c.values[coef.mask], coef.value, 1e-12);
  }
}

TEST(TrueReward, DimensionMismatch) {
  const auto m = constant_model(3, 2, 0.5);
  EXPECT_THROW(true_reward(m, ActionProfile({1, 1}, 2)), std::invalid_argument);
  EXPECT_THROW(true_reward(m, ActionProfile({1, 1, 1}, 4)), std::invalid_argument);
}

TEST(SupportCheck, OffSupportCoefficientsVanish) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = generate_model(generate_graph(7, 3, seed), 2, seed + 1);
    for (const auto& c : check_transform(m)) {
      EXPECT_TRUE(c.pass) << "unit " << c.unit;
      EXPECT_LE(c.max_off_support, 1e-9);
    }
  }
}

TEST(SupportCheck, InjectedViolationIsReported) {
  auto m = generate_model(generate_graph(5, 2, 1), 2, 2);
  const std::uint64_t block = block_index_set(m.graph, 2, 2).bits();
  const std::uint64_t outside = ~block & low_bits(5);
  ASSERT_NE(outside, 0U);
  m.coeffs[2].push_back({outside & (~outside + 1), 0.05});  // lowest bit outside B(3)
  const auto checks = check_transform(m);
  for (const auto& c : checks) EXPECT_EQ(c.pass, c.unit != 2);
  EXPECT_THROW(m.validate_support(), std::invalid_argument);
}

TEST(SupportCheck, RefusesWideTables) {
  const auto m = generate_model(generate_graph(20, 2, 1), 2, 2);
  EXPECT_THROW(check_transform(m), std::length_error);
}

TEST(Locality, AgreeingOnNeighborhoodMeansEqualReward) {
  const auto m = generate_model(generate_graph(10, 4, 5), 2, 6);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = static_cast<int>(rng() % 10);
    std::vector<int> a(10), b(10);
    for (int i = 0; i < 10; ++i) {
      a[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng() % 2);
      b[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng() % 2);
    }
    // half the time force agreement on N(n)
    const auto& nb = m.graph.neighborhoods[static_cast<std::size_t>(n)];
    if (rng() & 1) {
      for (int u : nb) b[static_cast<std::size_t>(u)] = a[static_cast<std::size_t>(u)];
    }
    const bool agree = std::all_of(nb.begin(), nb.end(), [&](int u) { return a[static_cast<std::size_t>(u)] == b[static_cast<std::size_t>(u)]; });
    const double ra = true_reward(m, ActionProfile(a, 2))[static_cast<std::size_t>(n)];
    const double rb = true_reward(m, ActionProfile(b, 2))[static_cast<std::size_t>(n)];
    if (agree) {
      EXPECT_EQ(ra, rb);
    }
  }
}

TEST(SampleRound, NoiselessEqualsTruth) {
  const auto m = generate_model(generate_graph(4, 2, 1), 2, 2);
  RandomEngine rng(1);
  const ActionProfile a({1, 2, 2, 1}, 2);
  const auto obs = sample_round(m, a, NoiseSpec{NoiseKind::none, 1.0}, rng, 3);
  EXPECT_EQ(obs.per_unit, true_reward(m, a));
  EXPECT_EQ(obs.round, 3);
  // vanishing Gaussian scale converges to the same values
  const auto tiny = sample_round(m, a, NoiseSpec{NoiseKind::gaussian, 1e-300}, rng);
  for (std::size_t n = 0; n < 4; ++n) EXPECT_EQ(tiny.per_unit[n], obs.per_unit[n]);
  EXPECT_THROW(sample_round(m, a, NoiseSpec{NoiseKind::gaussian, 0.0}, rng), std::invalid_argument);
}

TEST(SampleRound, SeededStreamsRepeat) {
  const auto m = generate_model(generate_graph(4, 2, 1), 2, 2);
  RandomEngine r1(77), r2(77);
  for (int t = 0; t < 50; ++t) {
    const auto a = ActionProfile::from_index(static_cast<std::uint64_t>(t % 16), 4, 2);
    const auto o1 = sample_round(m, a, NoiseSpec{}, r1, t), o2 = sample_round(m, a, NoiseSpec{}, r2, t);
    EXPECT_EQ(o1.per_unit, o2.per_unit);
    double sum = 0.0;
    for (double r : o1.per_unit) sum += r;
    EXPECT_NEAR(o1.mean, sum / 4.0, 1e-12);
  }
}

TEST(SampleRound, MonteCarloMean) {
  const auto m = generate_model(generate_graph(3, 2, 4), 2, 5);
  const ActionProfile a({2, 1, 2}, 2);
  const auto truth = true_reward(m, a);
  RandomEngine rng(8);
  const int draws = 100000;
  const double scale = 1.0;
  std::vector<double> sum(3, 0.0);
  for (int i = 0; i < draws; ++i) {
    const auto obs = sample_round(m, a, NoiseSpec{NoiseKind::gaussian, scale}, rng);
    for (std::size_t n = 0; n < 3; ++n) sum[n] += obs.per_unit[n];
  }
  for (std::size_t n = 0; n < 3; ++n) EXPECT_NEAR(sum[n] / draws, truth[n], 3.0 * scale / std::sqrt(double(draws)));
}

TEST(OptimalAction, SeparableModel) {
  SparseFourierModel m{self_only(4), 2, {}};
  for (int n = 0; n < 4; ++n) m.coeffs.push_back({{0, 0.5}, {std::uint64_t{1} << n, 0.1 * (n + 1)}});
  const auto [a, v] = optimal_action(m);
  EXPECT_EQ(a, ActionProfile({2, 2, 2, 2}, 2));
  EXPECT_NEAR(v, 0.5 + 0.25, 1e-15);
}

TEST(OptimalAction, ConstantModelTieBreak) {
  const auto [a, v] = optimal_action(constant_model(3, 4, 0.2));
  EXPECT_EQ(a, ActionProfile({1, 1, 1}, 4));
  EXPECT_DOUBLE_EQ(v, 0.2);
}

TEST(OptimalAction, MatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = generate_model(generate_graph(6, 3, seed), 2, seed + 50);
    const auto [a, v] = optimal_action(m);
    const auto [idx, value] = brute_force_optimum(m);
    EXPECT_EQ(a.index(), idx);
    EXPECT_NEAR(v, value, 1e-12);
  }
}

TEST(OptimalAction, Cap) {
  const auto m = generate_model(generate_graph(12, 2, 1), 2, 1);
  EXPECT_THROW(optimal_action(m, 10), std::length_error);
}

TEST(ModelJson, RoundTripIsBitExact) {
  const auto m = generate_model(generate_graph(6, 3, 12), 4, 13);
  const auto text = model_to_json(m).dump();
  const auto back = model_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.graph.neighborhoods, m.graph.neighborhoods);
  EXPECT_EQ(back.arms, m.arms);
  ASSERT_EQ(back.coeffs.size(), m.coeffs.size());
  for (std::size_t n = 0; n < m.coeffs.size(); ++n) {
    ASSERT_EQ(back.coeffs[n].size(), m.coeffs[n].size());
    for (std::size_t k = 0; k < m.coeffs[n].size(); ++k) {
      EXPECT_EQ(back.coeffs[n][k].mask, m.coeffs[n][k].mask);
      EXPECT_EQ(back.coeffs[n][k].value, m.coeffs[n][k].value);
    }
  }
  EXPECT_EQ(model_to_json(back).dump(), text);
}

TEST(ModelJson, SupportCheckOnLoad) {
  auto j = model_to_json(generate_model(self_only(3), 2, 1));
  j["coeffs"][0]["0x2"] = 0.1;  // unit 1 touching unit 2's bit
  EXPECT_THROW(model_from_json(j), std::invalid_argument);
  EXPECT_NO_THROW(model_from_json(j, false));
  j["coeffs"][0]["0x10"] = 0.1;  // beyond the encoding width
  EXPECT_THROW(model_from_json(j, false), std::invalid_argument);
}
