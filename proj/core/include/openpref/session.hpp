#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "openpref/belief.hpp"
#include "openpref/config.hpp"
#include "openpref/evaluation.hpp"
#include "openpref/lm_gateway.hpp"
#include "openpref/query_optimizer.hpp"

namespace openpref {

enum class Phase { elicitation, prediction, feature_ranking, done };
enum class SessionStrategy { eig, lm_pairwise, lm_openended, self_mapping };

std::string to_string(Phase phase);
Phase phase_from_string(const std::string& text);
std::string to_string(SessionStrategy strategy);
SessionStrategy session_strategy_from_string(const std::string& text);

/// Strategies whose answers are Choices (as opposed to free text).
bool is_pairwise(SessionStrategy strategy);
/// Strategies whose answers update the particle belief.
bool updates_belief(SessionStrategy strategy);

using UserResponse = std::variant<Choice, std::string>;

struct PendingQuestion {
  std::uint64_t turn = 0;
  std::optional<PairwiseQuery> query;
  std::optional<VerbalizedQuestion> verbalized;
  std::optional<std::string> open_text;
  std::optional<double> eig_bits;
  std::optional<double> predictive_p_a;
  std::string asked_at;
};

struct TranscriptEntry {
  std::uint64_t turn = 0;
  std::optional<PairwiseQuery> query;
  std::optional<VerbalizedQuestion> verbalized;
  std::optional<std::string> question_text;  // open-ended strategies
  UserResponse response;
  std::optional<double> eig_bits;
  // Featurized examples for LM-generated pairwise questions; these drive the
  // belief update in place of a binary query.
  std::optional<FeatureVector> option_a_features;
  std::optional<FeatureVector> option_b_features;
  std::string asked_at;
  std::string answered_at;
  std::optional<BeliefSummary> belief_after;
};

struct PredictionRecord {
  std::string item_a;
  std::string item_b;
  std::optional<Prediction> prediction;
  std::optional<double> lm_confidence;  // LM predictions only
  std::optional<std::string> error;     // set when the case could not be evaluated
  std::optional<Choice> user_answer;
};

struct Session {
  std::string id;
  std::string domain_description;
  FeatureSet features;
  BeliefState belief;
  std::vector<TranscriptEntry> transcript;
  QuerySet asked;
  Phase phase = Phase::elicitation;
  SessionStrategy strategy = SessionStrategy::eig;
  SessionConfig config;
  std::optional<PendingQuestion> pending;
  std::vector<PredictionRecord> predictions;
  std::optional<std::vector<int>> feature_ranking;
  std::vector<LmCallRecord> lm_calls;
  std::vector<std::string> events;
  std::string created_at;
  std::uint64_t revision = 0;

  /// Throws ValidationError when a session invariant is broken.
  void validate() const;
  std::vector<HistoryTurn> history() const;
};

void to_json(nlohmann::json& j, const PendingQuestion& p);
void from_json(const nlohmann::json& j, PendingQuestion& p);
void to_json(nlohmann::json& j, const TranscriptEntry& e);
void from_json(const nlohmann::json& j, TranscriptEntry& e);
void to_json(nlohmann::json& j, const PredictionRecord& p);
void from_json(const nlohmann::json& j, PredictionRecord& p);
void to_json(nlohmann::json& j, const Session& s);
void from_json(const nlohmann::json& j, Session& s);

/// Recomputes the belief from an exported session document: prior from the
/// recorded seed, then one posterior update per recorded answer.
BeliefState replay_belief(const nlohmann::json& document);
/// Beliefs before any answer and after each transcript entry (T + 1 states).
std::vector<BeliefState> replay_trajectory(const Session& session);

/// Test file: JSON array (or {"tests": [...]}) of {item_a, item_b[, user_answer]}.
std::vector<TestCase> parse_test_cases(const nlohmann::json& document);
std::vector<TestCase> load_test_file(const std::filesystem::path& path);

/// One JSON document per session, replaced atomically (write temp + rename).
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path directory);

  void save(const Session& session);
  Session load(const std::string& id) const;
  bool exists(const std::string& id) const;
  std::vector<std::string> list() const;
  const std::filesystem::path& directory() const noexcept { return directory_; }

  /// Called at "begin", "written" (temp file complete) and "renamed";
  /// tests throw from it to simulate a crash at that point.
  std::function<void(std::string_view stage)> fault_hook;

 private:
  std::filesystem::path path_for(const std::string& id) const;
  std::filesystem::path directory_;
};

/// Orchestrates the elicitation loop for live users. Thread-safe: sessions
/// are independent; operations on one session are serialized by a per-session
/// reader/writer lock (reads run concurrently with each other).
class SessionService {
 public:
  SessionService(ServiceConfig config, std::shared_ptr<LmGateway> gateway);

  const ServiceConfig& config() const noexcept { return config_; }
  SessionStore& store() noexcept { return store_; }
  bool has_gateway() const noexcept { return gateway_ != nullptr; }

  /// Extracts features (unless supplied), builds the prior, persists.
  Session create_session(const std::string& domain_description, SessionStrategy strategy,
                         std::optional<SessionConfig> config = std::nullopt,
                         std::optional<FeatureSet> features = std::nullopt);

  /// Pending question payload; idempotent until answered. When the turn
  /// budget, time limit or query space is exhausted the session moves to
  /// the prediction phase and the payload has "question": null.
  nlohmann::json next_question(const std::string& id);

  BeliefSummary submit_answer(const std::string& id, const UserResponse& response);

  std::vector<PredictionRecord> predict_testcases(const std::string& id, std::vector<TestCase> tests);

  void finish_elicitation(const std::string& id);
  /// Records the user's own answers to the predicted test cases.
  nlohmann::json record_test_answers(const std::string& id, const std::vector<Choice>& answers);
  void record_feature_ranking(const std::string& id, const std::vector<int>& order);

  nlohmann::json export_transcript(const std::string& id);
  nlohmann::json state(const std::string& id);
  nlohmann::json belief(const std::string& id);
  /// EIG of every query against the current belief ("why this question").
  nlohmann::json query_scores(const std::string& id);

  Session snapshot(const std::string& id);

 private:
  struct Slot {
    std::shared_mutex mutex;
    Session session;
  };

  std::shared_ptr<Slot> slot(const std::string& id);
  std::unique_lock<std::shared_mutex> lock_exclusive(Slot& slot);
  std::shared_lock<std::shared_mutex> lock_shared(Slot& slot);
  void commit(Slot& slot, Session updated);
  const QuerySpace& query_space(std::size_t d, std::size_t k);
  LmGateway& require_gateway(const std::string& purpose) const;

  ServiceConfig config_;
  std::shared_ptr<LmGateway> gateway_;
  SessionStore store_;
  std::mutex slots_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
  std::mutex spaces_mutex_;
  std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<QuerySpace>> spaces_;
};

nlohmann::json question_payload(const Session& session);
nlohmann::json summary_json(const BeliefSummary& summary, const FeatureSet& features);

}  // namespace openpref
