#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "openpref/errors.hpp"
#include "openpref/evaluation.hpp"
#include "oracles.hpp"

using namespace openpref;

TEST(Tida, SumOfGainsOverInitialAccuracy) {
  const std::vector<double> a{0.5, 0.6, 0.4, 0.8};
  // (0.6-0.5) + (0.4-0.5) + (0.8-0.5)
  EXPECT_NEAR(tida(a), 0.3, 1e-15);
  EXPECT_EQ(tida(std::vector<double>{0.7, 0.7, 0.7}), 0.0);
  EXPECT_THROW(tida(std::vector<double>{0.5}), ContractViolation);
  AccuracySeries s{{0.2, 1.0}, {0, 1}};
  EXPECT_NEAR(tida(s), 0.8, 1e-15);
}

TEST(PredictChoice, MatchesOracleAverage) {
  std::mt19937_64 rng(9);
  const auto b = fixtures::random_belief(rng, 12, 4);
  const std::vector<double> fa{0.1, 0.9, 0.0, 0.4};
  const std::vector<double> fb{0.7, 0.2, 0.5, 0.4};
  long double p = 0;
  for (std::size_t i = 0; i < b.size(); ++i) p += b.weights[i] * oracle::bt_probability(b.personas[i].weights, fa, fb);
  const auto pred = predict_choice(b, fa, fb);
  EXPECT_NEAR(pred.probability_a, static_cast<double>(p), 1e-14);
  EXPECT_EQ(pred.choice.value, p >= 0.5 ? ChoiceValue::A : ChoiceValue::B);
  EXPECT_FALSE(pred.choice.tie_flag);
}

TEST(PredictChoice, ExactTieSetsFlag) {
  BeliefState b;
  b.personas = {{{1.0, 1.0}}};
  b.weights = {1.0};
  const std::vector<double> fa{1.0, 0.0};
  const std::vector<double> fb{0.0, 1.0};
  const auto pred = predict_choice(b, fa, fb);
  EXPECT_EQ(pred.probability_a, 0.5);
  EXPECT_EQ(pred.choice.value, ChoiceValue::A);
  EXPECT_TRUE(pred.choice.tie_flag);
}

TEST(Accuracy, CountsMatchingAnswers) {
  BeliefState b;
  b.personas = {{{2.0, -2.0}}};
  b.weights = {1.0};
  std::vector<TestCase> tests(4);
  for (auto& t : tests) {
    t.features_a = FeatureVector({1.0, 0.0});
    t.features_b = FeatureVector({0.0, 1.0});
  }
  tests[0].user_answer = Choice::a();
  tests[1].user_answer = Choice::a();
  tests[2].user_answer = Choice::b();
  tests[3].user_answer = Choice::a();
  EXPECT_EQ(accuracy(b, tests), 0.75);
  tests[3].user_answer.reset();
  EXPECT_THROW(accuracy(b, tests), ContractViolation);
  EXPECT_THROW(accuracy(b, std::vector<TestCase>{}), ContractViolation);
}

TEST(SimulatedUser, GreedyPicksHigherUtility) {
  SimulatedUser u(Persona{{1.0, -1.0, 0.5}}, ResponseMode::greedy, 3);
  const PairwiseQuery q(OptionVector::from_indices(3, {1}), OptionVector::from_indices(3, {2}));
  for (int i = 0; i < 20; ++i) EXPECT_EQ(simulate_response(u, q), Choice::b());
  EXPECT_EQ(simulate_response(u, q.swapped()), Choice::a());
}

TEST(SimulatedUser, SampledFollowsBradleyTerry) {
  const Persona theta{{0.8, -0.4}};
  SimulatedUser u(theta, ResponseMode::sampled, 11);
  const PairwiseQuery q(OptionVector::from_indices(2, {0}), OptionVector::from_indices(2, {1}));
  const int n = 40000;
  int a = 0;
  for (int i = 0; i < n; ++i) a += simulate_response(u, q) == Choice::a();
  const double p = 1.0 / (1.0 + std::exp(-1.2));
  EXPECT_NEAR(static_cast<double>(a) / n, p, 4 * std::sqrt(p * (1 - p) / n));
}

TEST(SimulatedUser, SameSeedSameAnswers) {
  SimulatedUser u1(Persona{{0.1, 0.0}}, ResponseMode::sampled, 5);
  SimulatedUser u2(Persona{{0.1, 0.0}}, ResponseMode::sampled, 5);
  const PairwiseQuery q(OptionVector::from_indices(2, {0}), OptionVector::from_indices(2, {1}));
  for (int i = 0; i < 50; ++i) EXPECT_EQ(simulate_response(u1, q), simulate_response(u2, q));
}

TEST(ResponseMode, Names) {
  EXPECT_EQ(response_mode_from_string(to_string(ResponseMode::greedy)), ResponseMode::greedy);
  EXPECT_EQ(response_mode_from_string(to_string(ResponseMode::sampled)), ResponseMode::sampled);
  EXPECT_THROW(response_mode_from_string("lazy"), ConfigurationError);
}

TEST(MeanStderr, KnownValues) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto m = mean_stderr(v);
  EXPECT_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.stderr_, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(mean_stderr(std::vector<double>{7}).stderr_, 0.0);
}

TEST(PosteriorCosine, AlignedAndOpposed) {
  BeliefState b;
  b.personas = {{{1.0, 2.0}}, {{3.0, 6.0}}};
  b.weights = {0.5, 0.5};
  EXPECT_NEAR(posterior_cosine(b, Persona{{0.5, 1.0}}), 1.0, 1e-15);
  EXPECT_NEAR(posterior_cosine(b, Persona{{-1.0, -2.0}}), -1.0, 1e-15);
  EXPECT_EQ(posterior_cosine(b, Persona{{0.0, 0.0}}), 0.0);
}
