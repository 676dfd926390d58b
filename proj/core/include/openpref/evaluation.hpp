#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "openpref/belief.hpp"
#include "openpref/preference_model.hpp"
#include "openpref/random.hpp"

namespace openpref {

struct TestCase {
  std::string item_a;
  std::string item_b;
  std::optional<FeatureVector> features_a;
  std::optional<FeatureVector> features_b;
  std::optional<Choice> user_answer;

  bool featurized() const noexcept { return features_a.has_value() && features_b.has_value(); }
};

struct Prediction {
  Choice choice;
  double probability_a = 0.5;
};

/// Bradley-Terry prediction averaged over the belief. Returns A when the
/// predictive probability is >= 0.5; exactly 0.5 sets the tie flag.
Prediction predict_choice(const BeliefState& belief, std::span<const double> features_a,
                          std::span<const double> features_b);
Prediction predict_choice(const BeliefState& belief, const TestCase& test);

/// Fraction of answered tests whose prediction matches the user's answer.
double accuracy(const BeliefState& belief, std::span<const TestCase> tests);

struct AccuracySeries {
  std::vector<double> accuracies;  // a_0 (before any answer) .. a_T
  std::vector<double> timestamps;  // turn index or seconds since start
};

/// Sum over t = 1..T of (a_t - a_0); unit turn spacing.
double tida(std::span<const double> accuracies);
inline double tida(const AccuracySeries& series) { return tida(series.accuracies); }

enum class ResponseMode { sampled, greedy };

std::string to_string(ResponseMode mode);
ResponseMode response_mode_from_string(const std::string& text);

/// Synthetic respondent whose answers follow Bradley-Terry with known
/// weights (sampled) or its utility argmax (greedy, A on exact ties).
class SimulatedUser {
 public:
  SimulatedUser(Persona theta_star, ResponseMode mode, std::uint64_t seed);

  const Persona& theta_star() const noexcept { return theta_; }
  ResponseMode mode() const noexcept { return mode_; }

  Choice respond(std::span<const double> option_a, std::span<const double> option_b);

 private:
  Persona theta_;
  ResponseMode mode_;
  Rng rng_;
};

Choice simulate_response(SimulatedUser& user, const PairwiseQuery& query);

/// Cosine similarity of the belief's weighted mean with `target`.
double posterior_cosine(const BeliefState& belief, const Persona& target);

/// Mean and standard error of the mean.
struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};
MeanStderr mean_stderr(std::span<const double> values);

}  // namespace openpref
