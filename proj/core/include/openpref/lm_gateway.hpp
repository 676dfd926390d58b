#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "openpref/chat_client.hpp"
#include "openpref/preference_model.hpp"

namespace openpref {

struct VerbalizedQuestion {
  std::string question_text;
  std::string example_a;
  std::string example_b;
  std::optional<PairwiseQuery> source_query;
  bool fallback_rendering = false;  // true when shown as raw feature lists
};

struct GuessWithProbability {
  Choice guess;
  double confidence = 0.5;
};

/// One question/answer exchange as shown to LMs in history blocks.
struct HistoryTurn {
  std::string question;
  std::string answer;
};

struct LmCallRecord {
  std::string template_name;
  std::string prompt;
  std::string response;
  double latency_ms = 0.0;
  int attempt = 1;
  bool parsed = false;
};

/// Per-caller audit sink: every LM exchange and every sanitation warning.
struct CallLog {
  std::vector<LmCallRecord> calls;
  std::vector<std::string> warnings;
};

struct GatewayOptions {
  int max_attempts = 2;  // one retry after a parse failure
};

// Output parsers, exposed for testing.
std::vector<std::string> parse_numbered_list(const std::string& text);
std::optional<std::vector<double>> parse_numeric_list(const std::string& text, std::size_t expected);
struct OptionPair {
  std::string question_text;
  std::string example_a;
  std::string example_b;
};
std::optional<OptionPair> parse_option_pair(const std::string& text);
std::optional<std::string> parse_question_line(const std::string& text);
std::optional<GuessWithProbability> parse_guess(const std::string& text, std::vector<std::string>* warnings);

/// "Q1: ...\nA1: ..." block, empty for no history.
std::string format_history(std::span<const HistoryTurn> history);

/// Option text for one side of a query: the descriptions of its active
/// features joined with " and ".
std::string describe_option(const OptionVector& option, const FeatureSet& features);

/// Feature-list rendering used when LM verbalization is unavailable and by
/// the self-mapping strategy.
VerbalizedQuestion self_mapping_rendering(const PairwiseQuery& query, const FeatureSet& features);

/// All LM interactions behind one chat client, with retry-once parsing and
/// a featurization cache keyed by item text and feature-set fingerprint.
class LmGateway {
 public:
  explicit LmGateway(std::shared_ptr<ChatClient> client, GatewayOptions options = {});

  ChatClient& client() const { return *client_; }

  /// Numbered list of `dimension` features in rank order.
  /// Throws LmOutputError("extraction_error") when the count is wrong twice.
  FeatureSet extract_features(const std::string& domain_description, std::size_t dimension = 10,
                              CallLog* log = nullptr);

  /// Throws LmOutputError("verbalization_error") without Option A/B markers.
  VerbalizedQuestion verbalize_query(const PairwiseQuery& query, const FeatureSet& features,
                                     CallLog* log = nullptr);

  /// Throws LmOutputError("featurization_error") on unparseable values.
  FeatureVector featurize_item(const std::string& item, const FeatureSet& features, CallLog* log = nullptr);

  /// With `features`, uses the feature-grounded pairwise prompt.
  VerbalizedQuestion lm_pairwise_question(std::span<const HistoryTurn> history, const FeatureSet* features,
                                          CallLog* log = nullptr);

  std::string lm_openended_question(std::span<const HistoryTurn> history, CallLog* log = nullptr);

  /// nullopt means abstention (unparseable twice).
  std::optional<GuessWithProbability> lm_predict(std::span<const HistoryTurn> history, const std::string& item_a,
                                                 const std::string& item_b, CallLog* log = nullptr);

  std::size_t cache_size() const;
  std::size_t cache_hits() const;

 private:
  template <typename T, typename Parser>
  std::optional<T> ask(const std::string& template_name, const std::string& prompt, Parser parse, CallLog* log,
                       std::string* last_response);

  std::shared_ptr<ChatClient> client_;
  GatewayOptions options_;
  mutable std::mutex cache_mutex_;
  std::map<std::string, FeatureVector> featurize_cache_;
  std::size_t cache_hits_ = 0;
};

}  // namespace openpref
