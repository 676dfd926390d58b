#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace openpref {

// Probabilities are kept inside [kProbabilityFloor, 1 - kProbabilityFloor]
// before any logarithm is taken.
inline constexpr double kProbabilityFloor = 1e-12;

double clamp_probability(double p) noexcept;

// Standard logistic 1 / (1 + e^-z), evaluated without overflow for large |z|.
double logistic(double z) noexcept;

struct Feature {
  int rank = 0;
  std::string description;

  bool operator==(const Feature&) const = default;
};

/// Ordered natural-language features with importance ranks 0..d-1
/// (rank 0 is the most important).
class FeatureSet {
 public:
  FeatureSet() = default;
  explicit FeatureSet(std::vector<Feature> features);

  /// Builds a set whose ranks follow list order.
  static FeatureSet from_descriptions(const std::vector<std::string>& descriptions);

  std::size_t dimension() const noexcept { return features_.size(); }
  const std::vector<Feature>& features() const noexcept { return features_; }

  /// Feature description at a given rank.
  const std::string& description(std::size_t rank) const;

  /// Stable content hash (hex) used to key featurization caches.
  std::string fingerprint() const;

  bool operator==(const FeatureSet&) const = default;

 private:
  std::vector<Feature> features_;  // sorted by rank
};

/// Real-valued item features, each in [0, 1].
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_.at(i); }

  bool operator==(const FeatureVector&) const = default;

 private:
  std::vector<double> values_;
};

/// Binary option with exactly `k` active features.
class OptionVector {
 public:
  OptionVector() = default;
  OptionVector(std::vector<std::uint8_t> bits, std::size_t k);

  /// Builds an option of dimension d from its active feature indices.
  static OptionVector from_indices(std::size_t d, const std::vector<std::size_t>& active);

  std::size_t dimension() const noexcept { return bits_.size(); }
  std::size_t k() const noexcept { return k_; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  std::vector<std::size_t> active_indices() const;
  std::vector<double> as_real() const;

  // Canonical order: lexicographic on the sorted active-index list, so
  // {0,1} < {0,2} < ... < {8,9}.
  std::strong_ordering operator<=>(const OptionVector& other) const;
  bool operator==(const OptionVector& other) const = default;

 private:
  std::vector<std::uint8_t> bits_;
  std::size_t k_ = 0;
};

struct Persona {
  std::vector<double> weights;

  std::size_t dimension() const noexcept { return weights.size(); }
  bool operator==(const Persona&) const = default;
};

class PairwiseQuery {
 public:
  PairwiseQuery() = default;
  PairwiseQuery(OptionVector a, OptionVector b);

  const OptionVector& option_a() const noexcept { return a_; }
  const OptionVector& option_b() const noexcept { return b_; }
  std::size_t dimension() const noexcept { return a_.dimension(); }

  PairwiseQuery swapped() const { return PairwiseQuery(b_, a_); }
  /// Same unordered pair with the canonically smaller option first.
  PairwiseQuery canonical() const;

  /// o_a - o_b as a real vector.
  std::vector<double> difference() const;

  auto operator<=>(const PairwiseQuery&) const = default;
  bool operator==(const PairwiseQuery&) const = default;

 private:
  OptionVector a_;
  OptionVector b_;
};

enum class ChoiceValue { A, B };

struct Choice {
  ChoiceValue value = ChoiceValue::A;
  bool tie_flag = false;

  static Choice a() { return {ChoiceValue::A, false}; }
  static Choice b() { return {ChoiceValue::B, false}; }

  Choice flipped() const { return {value == ChoiceValue::A ? ChoiceValue::B : ChoiceValue::A, tie_flag}; }
  bool same_side(const Choice& other) const noexcept { return value == other.value; }
  bool operator==(const Choice&) const = default;
};

std::string to_string(ChoiceValue value);
ChoiceValue choice_value_from_string(const std::string& text);

double utility(const Persona& persona, std::span<const double> option);

/// Probability that `persona` picks the first option under Bradley-Terry.
double choice_probability(const Persona& persona, const PairwiseQuery& query);
double choice_probability(const Persona& persona, std::span<const double> option_a,
                          std::span<const double> option_b);

/// Likelihood of `observed` given the probability of choosing A.
inline double outcome_probability(double p_a, const Choice& observed) noexcept {
  return observed.value == ChoiceValue::A ? p_a : 1.0 - p_a;
}

struct ClampReport {
  FeatureVector vector;
  std::vector<std::size_t> replaced_non_finite;  // positions set to 0.5
  std::vector<std::size_t> clamped;              // positions pulled into [0, 1]
};

/// Sanitizes LM-produced feature values: clamps into [0, 1] and replaces
/// non-finite entries with 0.5. Throws ParseError on a length mismatch.
ClampReport featurize_clamp(std::span<const double> raw, std::size_t dimension);

}  // namespace openpref
