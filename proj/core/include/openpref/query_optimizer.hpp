#pragma once

#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include "openpref/belief.hpp"
#include "openpref/preference_model.hpp"

namespace openpref {

/// All unordered pairs of distinct K-hot options over d features.
///
/// Options are listed in canonical order (sorted active-index lists compared
/// lexicographically). Each query stores the smaller option first, and
/// queries are ordered by (first option index, second option index). This
/// order is also the tie-break order for query selection.
class QuerySpace {
 public:
  QuerySpace() = default;
  QuerySpace(std::size_t d, std::size_t k, std::vector<OptionVector> options);

  std::size_t dimension() const noexcept { return d_; }
  std::size_t k() const noexcept { return k_; }
  const std::vector<OptionVector>& options() const noexcept { return options_; }
  const std::vector<PairwiseQuery>& queries() const noexcept { return queries_; }
  /// (index of option_a, index of option_b) for each query.
  const std::vector<std::pair<std::size_t, std::size_t>>& option_pairs() const noexcept { return pairs_; }

  std::size_t size() const noexcept { return queries_.size(); }
  bool empty() const noexcept { return queries_.empty(); }

 private:
  std::size_t d_ = 0;
  std::size_t k_ = 0;
  std::vector<OptionVector> options_;
  std::vector<PairwiseQuery> queries_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

QuerySpace enumerate_queries(std::size_t d, std::size_t k);

/// Queries already asked; stored canonically so either orientation matches.
class QuerySet {
 public:
  void insert(const PairwiseQuery& q) { set_.insert(q.canonical()); }
  bool contains(const PairwiseQuery& q) const { return set_.count(q.canonical()) > 0; }
  std::size_t size() const noexcept { return set_.size(); }
  bool empty() const noexcept { return set_.empty(); }
  auto begin() const { return set_.begin(); }
  auto end() const { return set_.end(); }

 private:
  std::set<PairwiseQuery> set_;
};

struct ScoredQuery {
  PairwiseQuery query;
  double eig_bits = 0.0;
  double predictive_p_a = 0.5;
  std::size_t index = 0;  // position in the QuerySpace
};

/// Binary entropy in bits; 0 at p = 0 and p = 1.
double binary_entropy_bits(double p) noexcept;

/// sum_i w_i * p(A | persona_i), clamped to [1e-12, 1 - 1e-12].
double predictive_choice_prob(const BeliefState& belief, const PairwiseQuery& query);

/// H_b(predictive) - sum_i w_i H_b(p_i), in bits, floored at 0.
double expected_information_gain(const BeliefState& belief, const PairwiseQuery& query);

/// Scores every query in the space (same arithmetic as the single-query
/// functions, so results agree bit for bit).
std::vector<ScoredQuery> score_queries(const BeliefState& belief, const QuerySpace& space);

/// EIG-maximizing query not in `exclude`; ties go to the earliest query.
/// Throws QuerySpaceExhausted when every query is excluded.
ScoredQuery select_optimal_query(const BeliefState& belief, const QuerySpace& space,
                                 const QuerySet& exclude = {});

}  // namespace openpref
