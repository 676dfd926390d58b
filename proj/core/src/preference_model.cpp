#include "openpref/preference_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "openpref/errors.hpp"
#include "openpref/hashing.hpp"

namespace openpref {

double clamp_probability(double p) noexcept {
  return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

double logistic(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

FeatureSet::FeatureSet(std::vector<Feature> features) : features_(std::move(features)) {
  if (features_.size() < 2) throw ValidationError("feature set needs at least 2 features");
  std::sort(features_.begin(), features_.end(),
            [](const Feature& l, const Feature& r) { return l.rank < r.rank; });
  std::set<std::string> seen;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].rank != static_cast<int>(i))
      throw ValidationError("feature ranks must be exactly 0..d-1 without duplicates");
    if (features_[i].description.empty())
      throw ValidationError("feature description must be non-empty");
    if (!seen.insert(features_[i].description).second)
      throw ValidationError("duplicate feature description: " + features_[i].description);
  }
}

FeatureSet FeatureSet::from_descriptions(const std::vector<std::string>& descriptions) {
  std::vector<Feature> features;
  features.reserve(descriptions.size());
  for (std::size_t i = 0; i < descriptions.size(); ++i)
    features.push_back({static_cast<int>(i), descriptions[i]});
  return FeatureSet(std::move(features));
}

const std::string& FeatureSet::description(std::size_t rank) const {
  require(rank < features_.size(), "feature rank out of range");
  return features_[rank].description;
}

std::string FeatureSet::fingerprint() const {
  std::string joined;
  for (const auto& f : features_) {
    joined += std::to_string(f.rank);
    joined += '\x1f';
    joined += f.description;
    joined += '\x1e';
  }
  return sha256_hex(joined);
}

FeatureVector::FeatureVector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("feature values must lie in [0, 1]");
  }
}

OptionVector::OptionVector(std::vector<std::uint8_t> bits, std::size_t k)
    : bits_(std::move(bits)), k_(k) {
  std::size_t ones = 0;
  for (auto b : bits_) {
    if (b > 1) throw ValidationError("option bits must be 0 or 1");
    ones += b;
  }
  if (ones != k_) throw ValidationError("option must have exactly K active features");
}

OptionVector OptionVector::from_indices(std::size_t d, const std::vector<std::size_t>& active) {
  std::vector<std::uint8_t> bits(d, 0);
  for (auto i : active) {
    require(i < d, "active feature index out of range");
    if (bits[i]) throw ValidationError("duplicate active feature index");
    bits[i] = 1;
  }
  return OptionVector(std::move(bits), active.size());
}

std::vector<std::size_t> OptionVector::active_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out.push_back(i);
  return out;
}

std::vector<double> OptionVector::as_real() const {
  return {bits_.begin(), bits_.end()};
}

std::strong_ordering OptionVector::operator<=>(const OptionVector& other) const {
  if (auto c = bits_.size() <=> other.bits_.size(); c != 0) return c;
  if (auto c = k_ <=> other.k_; c != 0) return c;
  // Sorted-index lexicographic order equals reversed bitwise lexicographic order
  // for equal K: the first differing position is active in the smaller option.
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] != other.bits_[i]) return bits_[i] > other.bits_[i] ? std::strong_ordering::less
                                                                     : std::strong_ordering::greater;
  }
  return std::strong_ordering::equal;
}

PairwiseQuery::PairwiseQuery(OptionVector a, OptionVector b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.dimension() != b_.dimension() || a_.k() != b_.k())
    throw ValidationError("query options must share d and K");
  if (a_ == b_) throw ValidationError("query options must differ");
}

PairwiseQuery PairwiseQuery::canonical() const {
  return a_ < b_ ? *this : swapped();
}

std::vector<double> PairwiseQuery::difference() const {
  std::vector<double> diff(a_.dimension());
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = static_cast<double>(a_.bits()[i]) - static_cast<double>(b_.bits()[i]);
  return diff;
}

std::string to_string(ChoiceValue value) { return value == ChoiceValue::A ? "A" : "B"; }

ChoiceValue choice_value_from_string(const std::string& text) {
  if (text == "A" || text == "a") return ChoiceValue::A;
  if (text == "B" || text == "b") return ChoiceValue::B;
  throw ValidationError("choice must be \"A\" or \"B\", got \"" + text + "\"");
}

double utility(const Persona& persona, std::span<const double> option) {
  require(persona.weights.size() == option.size(), "utility: dimension mismatch");
  double u = 0.0;
  for (std::size_t i = 0; i < option.size(); ++i) u += persona.weights[i] * option[i];
  return u;
}

double choice_probability(const Persona& persona, std::span<const double> option_a,
                          std::span<const double> option_b) {
  return logistic(utility(persona, option_a) - utility(persona, option_b));
}

double choice_probability(const Persona& persona, const PairwiseQuery& query) {
  const auto a = query.option_a().as_real();
  const auto b = query.option_b().as_real();
  return choice_probability(persona, a, b);
}

ClampReport featurize_clamp(std::span<const double> raw, std::size_t dimension) {
  if (raw.size() != dimension)
    throw ParseError("expected " + std::to_string(dimension) + " feature values, got " +
                     std::to_string(raw.size()));
  ClampReport report;
  std::vector<double> values(raw.begin(), raw.end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      values[i] = 0.5;
      report.replaced_non_finite.push_back(i);
    } else if (values[i] < 0.0 || values[i] > 1.0) {
      values[i] = std::clamp(values[i], 0.0, 1.0);
      report.clamped.push_back(i);
    }
  }
  report.vector = FeatureVector(std::move(values));
  return report;
}

}  // namespace openpref
