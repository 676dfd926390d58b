#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "openpref/errors.hpp"
#include "openpref/query_optimizer.hpp"
#include "oracles.hpp"

using namespace openpref;

TEST(QuerySpace, CardinalityForTenChooseTwo) {
  const auto space = enumerate_queries(10, 2);
  EXPECT_EQ(space.options().size(), 45u);
  EXPECT_EQ(space.size(), 990u);
}

TEST(QuerySpace, CardinalityMatchesBinomialCounts) {
  for (std::size_t d = 2; d <= 8; ++d) {
    for (std::size_t k = 1; k <= d; ++k) {
      const auto options = oracle::n_choose_k(d, k);
      const auto space = enumerate_queries(d, k);
      EXPECT_EQ(space.options().size(), options) << d << "," << k;
      EXPECT_EQ(space.size(), options * (options - 1) / 2) << d << "," << k;
    }
  }
}

TEST(QuerySpace, CanonicalOrderAndUniqueness) {
  const auto space = enumerate_queries(10, 2);
  const auto& opts = space.options();
  for (std::size_t i = 1; i < opts.size(); ++i) EXPECT_LT(opts[i - 1], opts[i]);
  EXPECT_EQ(opts.front().active_indices(), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(opts[1].active_indices(), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(opts.back().active_indices(), (std::vector<std::size_t>{8, 9}));

  std::set<PairwiseQuery> seen;
  for (std::size_t n = 0; n < space.size(); ++n) {
    const auto& q = space.queries()[n];
    EXPECT_EQ(q, q.canonical());
    EXPECT_TRUE(seen.insert(q).second);
    const auto [i, j] = space.option_pairs()[n];
    EXPECT_LT(i, j);
    EXPECT_EQ(q.option_a(), opts[i]);
    EXPECT_EQ(q.option_b(), opts[j]);
    if (n > 0) EXPECT_LT(space.option_pairs()[n - 1], space.option_pairs()[n]);
  }
  // Overlapping options are part of the space: {0,1} vs {0,2}.
  EXPECT_EQ(space.queries().front().option_b().active_indices(), (std::vector<std::size_t>{0, 2}));
}

TEST(QuerySpace, RejectsBadK) {
  EXPECT_THROW(enumerate_queries(3, 0), ContractViolation);
  EXPECT_THROW(enumerate_queries(3, 4), ContractViolation);
}

TEST(BinaryEntropy, KnownValues) {
  EXPECT_EQ(binary_entropy_bits(0.5), 1.0);
  EXPECT_EQ(binary_entropy_bits(0.0), 0.0);
  EXPECT_EQ(binary_entropy_bits(1.0), 0.0);
  EXPECT_NEAR(binary_entropy_bits(0.25), -(0.25 * std::log2(0.25) + 0.75 * std::log2(0.75)), 1e-15);
  EXPECT_NEAR(binary_entropy_bits(0.1), binary_entropy_bits(0.9), 1e-15);
}

TEST(ExpectedInformationGain, MatchesDirectMutualInformation) {
  std::mt19937_64 rng(123);
  const auto space = enumerate_queries(10, 2);
  std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
  std::uniform_int_distribution<std::size_t> size(2, 8);
  for (int trial = 0; trial < 300; ++trial) {
    const auto belief = fixtures::random_belief(rng, size(rng), 10);
    const auto& q = space.queries()[pick(rng)];
    const double eig = expected_information_gain(belief, q);
    EXPECT_NEAR(eig, static_cast<double>(oracle::mutual_information_bits(belief, q)), 1e-9);
    EXPECT_GE(eig, 0.0);
    EXPECT_LE(eig, 1.0);
    EXPECT_NEAR(eig, expected_information_gain(belief, q.swapped()), 1e-12);
  }
}

TEST(ExpectedInformationGain, ZeroWhenParticlesAgree) {
  BeliefState b;
  b.personas.assign(4, Persona{{0.3, -0.2, 1.0}});
  b.weights.assign(4, 0.25);
  const PairwiseQuery q(OptionVector::from_indices(3, {0}), OptionVector::from_indices(3, {2}));
  EXPECT_NEAR(expected_information_gain(b, q), 0.0, 1e-15);
}

TEST(ExpectedInformationGain, NearOneBitForOpposedConfidentParticles) {
  BeliefState b;
  b.personas = {{{50.0, -50.0}}, {{-50.0, 50.0}}};
  b.weights = {0.5, 0.5};
  const PairwiseQuery q(OptionVector::from_indices(2, {0}), OptionVector::from_indices(2, {1}));
  EXPECT_NEAR(expected_information_gain(b, q), 1.0, 1e-9);
}

TEST(PredictiveChoiceProb, WeightedAverage) {
  std::mt19937_64 rng(4);
  const auto b = fixtures::random_belief(rng, 6, 3);
  const PairwiseQuery q(OptionVector::from_indices(3, {1}), OptionVector::from_indices(3, {0}));
  long double expect = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    expect += b.weights[i] * oracle::bt_probability(b.personas[i].weights, q.option_a().as_real(),
                                                    q.option_b().as_real());
  EXPECT_NEAR(predictive_choice_prob(b, q), static_cast<double>(expect), 1e-14);
}

TEST(ScoreQueries, AgreesWithPerQueryEvaluation) {
  PriorConfig c;
  c.particles = 300;
  const auto b = init_prior(10, c, 77);
  const auto space = enumerate_queries(10, 2);
  const auto scored = score_queries(b, space);
  ASSERT_EQ(scored.size(), space.size());
  for (std::size_t n = 0; n < scored.size(); n += 7) {
    EXPECT_EQ(scored[n].index, n);
    EXPECT_EQ(scored[n].query, space.queries()[n]);
    EXPECT_EQ(scored[n].eig_bits, expected_information_gain(b, space.queries()[n]));
    EXPECT_EQ(scored[n].predictive_p_a, predictive_choice_prob(b, space.queries()[n]));
  }
}

TEST(SelectOptimalQuery, IsTheExhaustiveArgmax) {
  PriorConfig c;
  c.particles = 400;
  const auto b = init_prior(10, c, 31);
  const auto space = enumerate_queries(10, 2);
  const auto best = select_optimal_query(b, space);
  double max_eig = -1;
  std::size_t arg = 0;
  for (std::size_t n = 0; n < space.size(); ++n) {
    const double e = static_cast<double>(oracle::mutual_information_bits(b, space.queries()[n]));
    if (e > max_eig + 1e-12) {
      max_eig = e;
      arg = n;
    }
  }
  EXPECT_NEAR(best.eig_bits, max_eig, 1e-9);
  EXPECT_EQ(best.index, arg);
  // Under the rank-scaled prior the top-ranked features carry the most uncertainty.
  const auto a = best.query.option_a().active_indices();
  const auto bb = best.query.option_b().active_indices();
  EXPECT_TRUE(a[0] == 0 || bb[0] == 0);
}

TEST(SelectOptimalQuery, TiesBreakToFirstInCanonicalOrder) {
  BeliefState b;
  b.personas.assign(3, Persona{std::vector<double>(4, 0.0)});
  b.weights.assign(3, 1.0 / 3);
  const auto space = enumerate_queries(4, 2);
  const auto best = select_optimal_query(b, space);
  EXPECT_EQ(best.index, 0u);
  QuerySet asked;
  asked.insert(space.queries()[0]);
  EXPECT_EQ(select_optimal_query(b, space, asked).index, 1u);
}

TEST(SelectOptimalQuery, ExcludesAskedQueriesInEitherOrientation) {
  PriorConfig c;
  c.particles = 200;
  const auto b = init_prior(5, c, 2);
  const auto space = enumerate_queries(5, 2);
  const auto first = select_optimal_query(b, space);
  QuerySet asked;
  asked.insert(first.query.swapped());
  EXPECT_TRUE(asked.contains(first.query));
  const auto second = select_optimal_query(b, space, asked);
  EXPECT_NE(second.query, first.query);
  EXPECT_LE(second.eig_bits, first.eig_bits);
}

TEST(SelectOptimalQuery, ExhaustedSpaceThrows) {
  PriorConfig c;
  c.particles = 20;
  const auto b = init_prior(3, c, 2);
  const auto space = enumerate_queries(3, 1);
  QuerySet asked;
  for (const auto& q : space.queries()) asked.insert(q);
  EXPECT_THROW(select_optimal_query(b, space, asked), QuerySpaceExhausted);
}

TEST(SelectOptimalQuery, DimensionMismatchIsContractViolation) {
  PriorConfig c;
  c.particles = 20;
  EXPECT_THROW(select_optimal_query(init_prior(4, c, 1), enumerate_queries(5, 2)), ContractViolation);
}
