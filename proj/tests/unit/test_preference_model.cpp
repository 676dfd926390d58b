#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "openpref/errors.hpp"
#include "openpref/preference_model.hpp"
#include "oracles.hpp"

using namespace openpref;

TEST(Logistic, MatchesClosedForm) {
  for (double z = -30; z <= 30; z += 0.37) EXPECT_NEAR(logistic(z), 1.0 / (1.0 + std::exp(-z)), 1e-15) << z;
  EXPECT_EQ(logistic(0.0), 0.5);
}

TEST(Logistic, StableAtExtremes) {
  EXPECT_EQ(logistic(-1000.0), 0.0);
  EXPECT_EQ(logistic(1000.0), 1.0);
  EXPECT_FALSE(std::isnan(logistic(-std::numeric_limits<double>::max())));
}

TEST(ClampProbability, KeepsLogsFinite) {
  EXPECT_EQ(clamp_probability(0.0), kProbabilityFloor);
  EXPECT_EQ(clamp_probability(1.0), 1.0 - kProbabilityFloor);
  EXPECT_EQ(clamp_probability(0.3), 0.3);
  EXPECT_TRUE(std::isfinite(std::log(clamp_probability(logistic(-800)))));
}

TEST(FeatureSet, FromDescriptionsAssignsRanks) {
  const auto fs = FeatureSet::from_descriptions({"alpha", "beta", "gamma"});
  ASSERT_EQ(fs.dimension(), 3u);
  EXPECT_EQ(fs.features()[2].rank, 2);
  EXPECT_EQ(fs.description(1), "beta");
}

TEST(FeatureSet, RejectsMalformedSets) {
  EXPECT_THROW(FeatureSet::from_descriptions({"only"}), ValidationError);
  EXPECT_THROW(FeatureSet::from_descriptions({"a", "a"}), ValidationError);
  EXPECT_THROW(FeatureSet::from_descriptions({"a", ""}), ValidationError);
  EXPECT_THROW(FeatureSet({{0, "a"}, {2, "b"}}), ValidationError);
  EXPECT_THROW(FeatureSet({{0, "a"}, {0, "b"}}), ValidationError);
}

TEST(FeatureSet, FingerprintDependsOnOrder) {
  const auto a = FeatureSet::from_descriptions({"x", "y"});
  const auto b = FeatureSet::from_descriptions({"y", "x"});
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  EXPECT_EQ(a.fingerprint(), FeatureSet::from_descriptions({"x", "y"}).fingerprint());
  EXPECT_EQ(a.fingerprint().size(), 64u);
}

TEST(FeatureVector, ValuesMustBeInUnitInterval) {
  EXPECT_NO_THROW(FeatureVector({0.0, 1.0, 0.5}));
  EXPECT_THROW(FeatureVector({1.01}), ValidationError);
  EXPECT_THROW(FeatureVector({-0.1}), ValidationError);
  EXPECT_THROW(FeatureVector({std::nan("")}), ValidationError);
}

TEST(OptionVector, FromIndicesAndRealView) {
  const auto o = OptionVector::from_indices(5, {3, 1});
  EXPECT_EQ(o.k(), 2u);
  EXPECT_EQ(o.active_indices(), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(o.as_real(), (std::vector<double>{0, 1, 0, 1, 0}));
  EXPECT_THROW(OptionVector::from_indices(5, {1, 1}), ValidationError);
  EXPECT_THROW(OptionVector({1, 0, 1}, 1), ValidationError);
  EXPECT_THROW(OptionVector({2, 0}, 1), ValidationError);
}

TEST(OptionVector, OrderedBySortedActiveIndices) {
  const auto o01 = OptionVector::from_indices(4, {0, 1});
  const auto o02 = OptionVector::from_indices(4, {0, 2});
  const auto o13 = OptionVector::from_indices(4, {1, 3});
  const auto o23 = OptionVector::from_indices(4, {2, 3});
  EXPECT_LT(o01, o02);
  EXPECT_LT(o02, o13);
  EXPECT_LT(o13, o23);
}

TEST(PairwiseQuery, Validation) {
  const auto a = OptionVector::from_indices(4, {0, 1});
  EXPECT_THROW(PairwiseQuery(a, a), ValidationError);
  EXPECT_THROW(PairwiseQuery(a, OptionVector::from_indices(5, {0, 2})), ValidationError);
  EXPECT_THROW(PairwiseQuery(a, OptionVector::from_indices(4, {2})), ValidationError);
}

TEST(PairwiseQuery, CanonicalPutsSmallerOptionFirst) {
  const auto lo = OptionVector::from_indices(4, {0, 1});
  const auto hi = OptionVector::from_indices(4, {2, 3});
  const PairwiseQuery q(hi, lo);
  EXPECT_EQ(q.canonical().option_a(), lo);
  EXPECT_EQ(q.canonical(), q.swapped());
  EXPECT_EQ(q.swapped().canonical(), q.canonical());
  EXPECT_EQ(q.difference(), (std::vector<double>{-1, -1, 1, 1}));
}

TEST(ChoiceProbability, MatchesOracleAndIsComplementary) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0, 2);
  const auto space_a = OptionVector::from_indices(6, {0, 4});
  const auto space_b = OptionVector::from_indices(6, {1, 2});
  for (int trial = 0; trial < 200; ++trial) {
    Persona p;
    for (int i = 0; i < 6; ++i) p.weights.push_back(normal(rng));
    const PairwiseQuery q(space_a, space_b);
    const double pa = choice_probability(p, q);
    EXPECT_NEAR(pa, static_cast<double>(oracle::bt_probability(p.weights, space_a.as_real(), space_b.as_real())),
                1e-14);
    EXPECT_NEAR(pa + choice_probability(p, q.swapped()), 1.0, 1e-14);
  }
}

TEST(ChoiceProbability, IndifferentPersonaIsHalf) {
  const Persona zero{{0, 0, 0}};
  const PairwiseQuery q(OptionVector::from_indices(3, {0}), OptionVector::from_indices(3, {2}));
  EXPECT_EQ(choice_probability(zero, q), 0.5);
}

TEST(ChoiceProbability, FeatureVectorsUseSameModel) {
  const Persona p{{1.0, -2.0}};
  const std::vector<double> a{0.9, 0.1};
  const std::vector<double> b{0.2, 0.3};
  EXPECT_NEAR(choice_probability(p, a, b), 1.0 / (1.0 + std::exp(-(0.7 + 0.4))), 1e-15);
  EXPECT_NEAR(utility(p, a), 0.7, 1e-15);
}

TEST(Choice, Conversions) {
  EXPECT_EQ(choice_value_from_string("A"), ChoiceValue::A);
  EXPECT_EQ(choice_value_from_string("B"), ChoiceValue::B);
  EXPECT_THROW(choice_value_from_string("C"), ValidationError);
  EXPECT_EQ(to_string(ChoiceValue::B), "B");
  EXPECT_EQ(Choice::a().flipped(), Choice::b());
  EXPECT_TRUE((Choice{ChoiceValue::A, true}).same_side(Choice::a()));
  EXPECT_EQ(outcome_probability(0.8, Choice::b()), 1.0 - 0.8);
}

TEST(FeaturizeClamp, ReplacesNonFiniteAndClamps) {
  const std::vector<double> raw{0.2, std::nan(""), 1.4, -0.3, std::numeric_limits<double>::infinity()};
  const auto r = featurize_clamp(raw, 5);
  EXPECT_EQ(std::vector<double>(r.vector.values().begin(), r.vector.values().end()),
            (std::vector<double>{0.2, 0.5, 1.0, 0.0, 0.5}));
  EXPECT_EQ(r.replaced_non_finite, (std::vector<std::size_t>{1, 4}));
  EXPECT_EQ(r.clamped, (std::vector<std::size_t>{2, 3}));
}

TEST(FeaturizeClamp, LengthMismatchIsParseError) {
  const std::vector<double> raw{0.1, 0.2};
  EXPECT_THROW(featurize_clamp(raw, 3), ParseError);
}
