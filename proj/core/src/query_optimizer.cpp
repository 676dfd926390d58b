#include "openpref/query_optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "openpref/errors.hpp"

namespace openpref {

namespace {

void enumerate_combinations(std::size_t d, std::size_t k, std::size_t start,
                            std::vector<std::size_t>& current, std::vector<OptionVector>& out) {
  if (current.size() == k) {
    out.push_back(OptionVector::from_indices(d, current));
    return;
  }
  for (std::size_t i = start; i + (k - current.size()) <= d; ++i) {
    current.push_back(i);
    enumerate_combinations(d, k, i + 1, current, out);
    current.pop_back();
  }
}

// Accumulates the two terms of the EIG decomposition for one query given
// per-persona utilities of its two options.
struct EigTerms {
  double predictive = 0.0;
  double conditional_entropy = 0.0;

  void add(double weight, double utility_a, double utility_b) {
    const double p = logistic(utility_a - utility_b);
    predictive += weight * p;
    conditional_entropy += weight * binary_entropy_bits(p);
  }

  double predictive_p_a() const { return clamp_probability(predictive); }
  double eig() const { return std::max(0.0, binary_entropy_bits(predictive_p_a()) - conditional_entropy); }
};

EigTerms eig_terms(const BeliefState& belief, const PairwiseQuery& query) {
  require(query.dimension() == belief.dimension(), "query dimension does not match belief");
  const auto a = query.option_a().as_real();
  const auto b = query.option_b().as_real();
  EigTerms terms;
  for (std::size_t i = 0; i < belief.size(); ++i)
    terms.add(belief.weights[i], utility(belief.personas[i], a), utility(belief.personas[i], b));
  return terms;
}

}  // namespace

QuerySpace::QuerySpace(std::size_t d, std::size_t k, std::vector<OptionVector> options)
    : d_(d), k_(k), options_(std::move(options)) {
  std::sort(options_.begin(), options_.end());
  for (std::size_t i = 0; i < options_.size(); ++i) {
    for (std::size_t j = i + 1; j < options_.size(); ++j) {
      queries_.emplace_back(options_[i], options_[j]);
      pairs_.emplace_back(i, j);
    }
  }
}

QuerySpace enumerate_queries(std::size_t d, std::size_t k) {
  require(k >= 1 && k <= d, "enumerate_queries: need 1 <= K <= d");
  std::vector<OptionVector> options;
  std::vector<std::size_t> current;
  enumerate_combinations(d, k, 0, current, options);
  return QuerySpace(d, k, std::move(options));
}

double binary_entropy_bits(double p) noexcept {
  if (!(p > 0.0 && p < 1.0)) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

double predictive_choice_prob(const BeliefState& belief, const PairwiseQuery& query) {
  return eig_terms(belief, query).predictive_p_a();
}

double expected_information_gain(const BeliefState& belief, const PairwiseQuery& query) {
  return eig_terms(belief, query).eig();
}

std::vector<ScoredQuery> score_queries(const BeliefState& belief, const QuerySpace& space) {
  require(space.dimension() == belief.dimension(), "query space dimension does not match belief");
  const std::size_t n = belief.size();
  const std::size_t m = space.options().size();

  // utilities[o * n + i] = persona_i . option_o
  std::vector<double> utilities(m * n);
  for (std::size_t o = 0; o < m; ++o) {
    const auto option = space.options()[o].as_real();
    for (std::size_t i = 0; i < n; ++i) utilities[o * n + i] = utility(belief.personas[i], option);
  }

  std::vector<ScoredQuery> scored;
  scored.reserve(space.size());
  for (std::size_t q = 0; q < space.size(); ++q) {
    const auto [ia, ib] = space.option_pairs()[q];
    EigTerms terms;
    for (std::size_t i = 0; i < n; ++i)
      terms.add(belief.weights[i], utilities[ia * n + i], utilities[ib * n + i]);
    scored.push_back({space.queries()[q], terms.eig(), terms.predictive_p_a(), q});
  }
  return scored;
}

ScoredQuery select_optimal_query(const BeliefState& belief, const QuerySpace& space,
                                 const QuerySet& exclude) {
  const auto scored = score_queries(belief, space);
  const ScoredQuery* best = nullptr;
  for (const auto& s : scored) {
    if (!exclude.empty() && exclude.contains(s.query)) continue;
    if (best == nullptr || s.eig_bits > best->eig_bits) best = &s;
  }
  if (best == nullptr)
    throw QuerySpaceExhausted("every query in the space has been asked; end elicitation");
  return *best;
}

}  // namespace openpref
