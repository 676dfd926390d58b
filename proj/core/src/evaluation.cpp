#include "openpref/evaluation.hpp"

#include <cmath>
#include <random>

#include "openpref/errors.hpp"

namespace openpref {

Prediction predict_choice(const BeliefState& belief, std::span<const double> features_a,
                          std::span<const double> features_b) {
  double p = 0.0;
  for (std::size_t i = 0; i < belief.size(); ++i)
    p += belief.weights[i] * choice_probability(belief.personas[i], features_a, features_b);
  Prediction out;
  out.probability_a = p;
  if (p > 0.5) {
    out.choice = Choice::a();
  } else if (p < 0.5) {
    out.choice = Choice::b();
  } else {
    out.choice = Choice{ChoiceValue::A, true};
  }
  return out;
}

Prediction predict_choice(const BeliefState& belief, const TestCase& test) {
  require(test.featurized(), "predict_choice: test case is not featurized");
  return predict_choice(belief, test.features_a->values(), test.features_b->values());
}

double accuracy(const BeliefState& belief, std::span<const TestCase> tests) {
  require(!tests.empty(), "accuracy: empty test set");
  std::size_t correct = 0;
  for (const auto& t : tests) {
    require(t.user_answer.has_value(), "accuracy: test case has no user answer");
    if (predict_choice(belief, t).choice.same_side(*t.user_answer)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(tests.size());
}

double tida(std::span<const double> accuracies) {
  require(accuracies.size() >= 2, "tida: series needs at least two points");
  double total = 0.0;
  for (std::size_t t = 1; t < accuracies.size(); ++t) total += accuracies[t] - accuracies[0];
  return total;
}

std::string to_string(ResponseMode mode) { return mode == ResponseMode::greedy ? "greedy" : "sampled"; }

ResponseMode response_mode_from_string(const std::string& text) {
  if (text == "greedy") return ResponseMode::greedy;
  if (text == "sampled") return ResponseMode::sampled;
  throw ConfigurationError("unknown response mode: " + text);
}

SimulatedUser::SimulatedUser(Persona theta_star, ResponseMode mode, std::uint64_t seed)
    : theta_(std::move(theta_star)), mode_(mode), rng_(seed) {}

Choice SimulatedUser::respond(std::span<const double> option_a, std::span<const double> option_b) {
  const double diff = utility(theta_, option_a) - utility(theta_, option_b);
  if (mode_ == ResponseMode::greedy) return diff >= 0.0 ? Choice::a() : Choice::b();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return unit(rng_) < logistic(diff) ? Choice::a() : Choice::b();
}

Choice simulate_response(SimulatedUser& user, const PairwiseQuery& query) {
  require(query.dimension() == user.theta_star().dimension(), "simulate_response: dimension mismatch");
  const auto a = query.option_a().as_real();
  const auto b = query.option_b().as_real();
  return user.respond(a, b);
}

double posterior_cosine(const BeliefState& belief, const Persona& target) {
  const auto mean = summarize(belief).mean;
  require(mean.size() == target.dimension(), "posterior_cosine: dimension mismatch");
  double dot = 0.0, nm = 0.0, nt = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    dot += mean[i] * target.weights[i];
    nm += mean[i] * mean[i];
    nt += target.weights[i] * target.weights[i];
  }
  if (nm == 0.0 || nt == 0.0) return 0.0;
  return dot / std::sqrt(nm * nt);
}

MeanStderr mean_stderr(std::span<const double> values) {
  MeanStderr out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.stderr_ = std::sqrt(ss / static_cast<double>(values.size() - 1)) / std::sqrt(static_cast<double>(values.size()));
  return out;
}

}  // namespace openpref
