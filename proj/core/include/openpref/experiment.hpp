#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "openpref/belief.hpp"
#include "openpref/evaluation.hpp"
#include "openpref/lm_gateway.hpp"

namespace openpref {

enum class Strategy { eig, random_query, lm_pairwise, lm_openended };

std::string to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& text);

struct ExperimentConfig {
  std::size_t dimension = 10;
  std::size_t k = 2;
  PriorConfig prior;
  UpdateConfig update;
  std::size_t turns = 10;
  std::size_t test_size = 15;
  ResponseMode response_mode = ResponseMode::greedy;
  bool exclude_asked = true;
  std::size_t threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

struct SeedRun {
  std::uint64_t seed = 0;
  AccuracySeries series;
  double tida = 0.0;
  double initial_cosine = 0.0;  // posterior-mean cosine to theta* at turn 0
  double final_cosine = 0.0;
  std::size_t abstentions = 0;  // LM predictions that could not be parsed
};

struct ExperimentReport {
  Strategy strategy = Strategy::eig;
  ExperimentConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<SeedRun> runs;  // same order as seeds
  MeanStderr tida;
  MeanStderr final_accuracy;

  nlohmann::json to_json() const;
  /// Rows of seed,strategy,turn,accuracy,tida.
  std::string to_csv() const;
};

/// Synthetic item rendered as text for LM-facing strategies.
std::string render_synthetic_item(const FeatureVector& features, const FeatureSet& names);

/// Free-text answer a simulated user gives to an open-ended question.
std::string simulated_openended_answer(const Persona& theta_star, const FeatureSet& names);

/// Runs one strategy across seeds against greedy or sampled simulated users.
/// Each seed draws theta* from the prior and a synthetic test set uniformly
/// from [0, 1]^d; the draws depend only on the seed, so different strategies
/// face the same users. lm_* strategies need a gateway; `features` defaults
/// to generic names (eig / random) or is extracted via the gateway.
ExperimentReport run_experiment(Strategy strategy, const ExperimentConfig& config,
                                std::span<const std::uint64_t> seeds, LmGateway* gateway = nullptr,
                                const FeatureSet* features = nullptr);

}  // namespace openpref
