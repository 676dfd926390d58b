#include "openpref/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "openpref/errors.hpp"
#include "openpref/prompts.hpp"
#include "openpref/query_optimizer.hpp"
#include "openpref/random.hpp"
#include "openpref/serialization.hpp"

namespace openpref {

namespace {

// Independent random streams per seed.
enum Stream : std::uint64_t { kThetaStar = 1, kTestSet = 2, kPrior = 3, kRandomQuery = 4, kUser = 5, kUpdates = 100 };

FeatureSet generic_features(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < d; ++i) names.push_back("feature " + std::to_string(i));
  return FeatureSet::from_descriptions(names);
}

Persona draw_theta_star(std::size_t d, const PriorConfig& prior, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Persona p;
  p.weights.resize(d);
  for (std::size_t i = 0; i < d; ++i)
    p.weights[i] = normal(rng) * std::sqrt(prior.base_variance) * importance_scale(static_cast<int>(i), prior);
  return p;
}

std::vector<TestCase> synthetic_tests(std::size_t n, std::size_t d, const Persona& theta_star,
                                      const FeatureSet& names, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SimulatedUser oracle(theta_star, ResponseMode::greedy, 0);
  std::vector<TestCase> tests(n);
  for (auto& t : tests) {
    std::vector<double> a(d), b(d);
    for (auto& x : a) x = unit(rng);
    for (auto& x : b) x = unit(rng);
    t.features_a = FeatureVector(a);
    t.features_b = FeatureVector(b);
    t.item_a = render_synthetic_item(*t.features_a, names);
    t.item_b = render_synthetic_item(*t.features_b, names);
    t.user_answer = oracle.respond(a, b);
  }
  return tests;
}

struct LmAccuracy {
  double accuracy = 0.5;
  std::size_t abstentions = 0;
};

LmAccuracy lm_accuracy(LmGateway& gateway, std::span<const HistoryTurn> history, std::span<const TestCase> tests) {
  LmAccuracy out;
  std::size_t correct = 0;
  for (const auto& t : tests) {
    const auto guess = gateway.lm_predict(history, t.item_a, t.item_b);
    if (!guess) {
      ++out.abstentions;
      continue;
    }
    if (guess->guess.same_side(*t.user_answer)) ++correct;
  }
  const auto answered = tests.size() - out.abstentions;
  if (answered > 0) out.accuracy = static_cast<double>(correct) / static_cast<double>(answered);
  return out;
}

SeedRun run_seed(Strategy strategy, const ExperimentConfig& config, std::uint64_t seed, const QuerySpace& space,
                 LmGateway* gateway, const FeatureSet& names) {
  const std::size_t d = config.dimension;
  SeedRun run;
  run.seed = seed;

  const Persona theta_star = draw_theta_star(d, config.prior, derive_seed(seed, kThetaStar));
  const auto tests = synthetic_tests(config.test_size, d, theta_star, names, derive_seed(seed, kTestSet));
  SimulatedUser user(theta_star, config.response_mode, derive_seed(seed, kUser));
  BeliefState belief = init_prior(d, config.prior, derive_seed(seed, kPrior));
  Rng query_rng(derive_seed(seed, kRandomQuery));
  QuerySet asked;
  std::vector<HistoryTurn> history;

  auto record = [&](std::size_t turn) {
    if (strategy == Strategy::lm_openended) {
      const auto acc = lm_accuracy(*gateway, history, tests);
      run.abstentions += acc.abstentions;
      run.series.accuracies.push_back(acc.accuracy);
    } else {
      run.series.accuracies.push_back(accuracy(belief, tests));
    }
    run.series.timestamps.push_back(static_cast<double>(turn));
  };

  record(0);
  run.initial_cosine = posterior_cosine(belief, theta_star);
  for (std::size_t t = 0; t < config.turns; ++t) {
    const auto step_seed = derive_seed(seed, kUpdates + t);
    switch (strategy) {
      case Strategy::eig:
      case Strategy::random_query: {
        const QuerySet none;
        const QuerySet& exclude = config.exclude_asked ? asked : none;
        PairwiseQuery query;
        if (strategy == Strategy::eig) {
          query = select_optimal_query(belief, space, exclude).query;
        } else {
          std::vector<std::size_t> available;
          for (std::size_t q = 0; q < space.size(); ++q)
            if (!exclude.contains(space.queries()[q])) available.push_back(q);
          if (available.empty()) throw QuerySpaceExhausted("every query in the space has been asked");
          std::uniform_int_distribution<std::size_t> pick(0, available.size() - 1);
          query = space.queries()[available[pick(query_rng)]];
        }
        asked.insert(query);
        const auto answer = simulate_response(user, query);
        belief = posterior_update(belief, query, answer, step_seed, config.update);
        break;
      }
      case Strategy::lm_pairwise: {
        const auto question = gateway->lm_pairwise_question(history, &names);
        const auto fa = gateway->featurize_item(question.example_a, names);
        const auto fb = gateway->featurize_item(question.example_b, names);
        const auto answer = user.respond(fa.values(), fb.values());
        belief = posterior_update(belief, fa.values(), fb.values(), answer, step_seed, config.update);
        history.push_back({question.question_text, "Option " + to_string(answer.value)});
        break;
      }
      case Strategy::lm_openended: {
        const auto question = gateway->lm_openended_question(history);
        history.push_back({question, simulated_openended_answer(theta_star, names)});
        break;
      }
    }
    record(t + 1);
  }
  run.final_cosine = posterior_cosine(belief, theta_star);
  run.tida = config.turns == 0 ? 0.0 : tida(run.series);
  return run;
}

}  // namespace

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::eig: return "eig";
    case Strategy::random_query: return "random_query";
    case Strategy::lm_pairwise: return "lm_pairwise";
    case Strategy::lm_openended: return "lm_openended";
  }
  return "eig";
}

Strategy strategy_from_string(const std::string& text) {
  for (auto s : {Strategy::eig, Strategy::random_query, Strategy::lm_pairwise, Strategy::lm_openended})
    if (to_string(s) == text) return s;
  throw ConfigurationError("unknown strategy: " + text);
}

void ExperimentConfig::validate() const {
  prior.validate();
  if (k < 1 || k > dimension) throw ConfigurationError("need 1 <= K <= d");
  if (test_size < 1) throw ConfigurationError("test set must be non-empty");
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"d", c.dimension},
                     {"K", c.k},
                     {"prior", c.prior},
                     {"update", c.update},
                     {"turns", c.turns},
                     {"test_size", c.test_size},
                     {"response_mode", to_string(c.response_mode)},
                     {"exclude_asked", c.exclude_asked}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  c.dimension = j.value("d", c.dimension);
  c.k = j.value("K", c.k);
  if (j.contains("prior")) c.prior = j.at("prior").get<PriorConfig>();
  if (j.contains("update")) c.update = j.at("update").get<UpdateConfig>();
  c.turns = j.value("turns", c.turns);
  c.test_size = j.value("test_size", c.test_size);
  if (j.contains("response_mode")) c.response_mode = response_mode_from_string(j.at("response_mode"));
  c.exclude_asked = j.value("exclude_asked", c.exclude_asked);
}

std::string render_synthetic_item(const FeatureVector& features, const FeatureSet& names) {
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto l, auto r) { return features[l] > features[r]; });
  std::ostringstream out;
  out << "An article";
  bool any = false;
  for (auto i : order) {
    if (features[i] < 0.5) break;
    out << (any ? "; " : " featuring ") << names.description(i);
    any = true;
  }
  if (!any) out << " with none of the listed features strongly present";
  out << ".";
  return out.str();
}

std::string simulated_openended_answer(const Persona& theta_star, const FeatureSet& names) {
  std::vector<std::size_t> order(theta_star.dimension());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto l, auto r) { return theta_star.weights[l] > theta_star.weights[r]; });
  std::string answer = "I most enjoy articles with " + names.description(order[0]);
  if (order.size() > 1 && theta_star.weights[order[1]] > 0.0) answer += " and " + names.description(order[1]);
  if (theta_star.weights[order.back()] < 0.0)
    answer += "; I am not interested in articles with " + names.description(order.back());
  return answer + ".";
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json runs_json = nlohmann::json::array();
  for (const auto& r : runs) {
    runs_json.push_back({{"seed", r.seed},
                         {"accuracy", r.series.accuracies},
                         {"turns", r.series.timestamps},
                         {"tida", r.tida},
                         {"initial_cosine", r.initial_cosine},
                         {"final_cosine", r.final_cosine},
                         {"abstentions", r.abstentions}});
  }
  return {{"strategy", openpref::to_string(strategy)},
          {"config", config},
          {"seeds", seeds},
          {"runs", runs_json},
          {"tida", {{"mean", tida.mean}, {"stderr", tida.stderr_}}},
          {"final_accuracy", {{"mean", final_accuracy.mean}, {"stderr", final_accuracy.stderr_}}}};
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "seed,strategy,turn,accuracy,tida\n";
  for (const auto& r : runs)
    for (std::size_t t = 0; t < r.series.accuracies.size(); ++t)
      out << r.seed << ',' << openpref::to_string(strategy) << ',' << t << ',' << r.series.accuracies[t] << ','
          << r.tida << '\n';
  return out.str();
}

ExperimentReport run_experiment(Strategy strategy, const ExperimentConfig& config,
                                std::span<const std::uint64_t> seeds, LmGateway* gateway,
                                const FeatureSet* features) {
  config.validate();
  const bool needs_lm = strategy == Strategy::lm_pairwise || strategy == Strategy::lm_openended;
  if (needs_lm && gateway == nullptr)
    throw ConfigurationError("strategy " + to_string(strategy) + " requires a chat client");

  FeatureSet names;
  if (features) {
    names = *features;
  } else if (needs_lm) {
    names = gateway->extract_features(std::string(kDefaultDomainDescription), config.dimension);
  } else {
    names = generic_features(config.dimension);
  }
  if (names.dimension() != config.dimension) throw ConfigurationError("feature set dimension does not match d");

  const QuerySpace space = enumerate_queries(config.dimension, config.k);

  ExperimentReport report;
  report.strategy = strategy;
  report.config = config;
  report.seeds.assign(seeds.begin(), seeds.end());
  report.runs.resize(seeds.size());

  std::size_t workers = config.threads != 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(seeds.size(), 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        report.runs[i] = run_seed(strategy, config, seeds[i], space, gateway, names);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<double> tidas, finals;
  for (const auto& r : report.runs) {
    tidas.push_back(r.tida);
    finals.push_back(r.series.accuracies.back());
  }
  report.tida = mean_stderr(tidas);
  report.final_accuracy = mean_stderr(finals);
  return report;
}

}  // namespace openpref
