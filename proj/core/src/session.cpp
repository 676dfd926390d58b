#include "openpref/session.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "openpref/errors.hpp"
#include "openpref/prompts.hpp"
#include "openpref/serialization.hpp"

namespace openpref {

namespace {

using Json = nlohmann::json;

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

double seconds_since(const std::string& iso) {
  std::tm tm{};
  std::istringstream in(iso.substr(0, 19));
  in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
  if (in.fail()) return 0.0;
  const auto then = std::chrono::system_clock::from_time_t(timegm(&tm));
  return std::chrono::duration<double>(std::chrono::system_clock::now() - then).count();
}

std::string new_session_id() {
  std::random_device rd;
  std::ostringstream out;
  out << std::hex;
  for (int i = 0; i < 4; ++i) {
    out.width(8);
    out.fill('0');
    out << rd();
  }
  return out.str();
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

Json response_json(const UserResponse& r) {
  if (const auto* c = std::get_if<Choice>(&r)) return Json{{"choice", *c}};
  return Json{{"text", std::get<std::string>(r)}};
}

UserResponse response_from(const Json& j) {
  if (j.contains("choice")) return j.at("choice").get<Choice>();
  if (j.contains("text")) return j.at("text").get<std::string>();
  throw ValidationError("response needs either \"choice\" or \"text\"");
}

bool has_choice(const TranscriptEntry& e) { return std::holds_alternative<Choice>(e.response); }

// The belief update carried by one transcript entry, if any.
std::optional<BeliefState> apply_entry(const BeliefState& belief, const TranscriptEntry& entry,
                                       const SessionConfig& config) {
  if (!has_choice(entry)) return std::nullopt;
  const auto& choice = std::get<Choice>(entry.response);
  const auto seed = update_seed(config.seed, belief.turn);
  if (entry.option_a_features && entry.option_b_features)
    return posterior_update(belief, entry.option_a_features->values(), entry.option_b_features->values(), choice,
                            seed, config.update);
  if (entry.query) return posterior_update(belief, *entry.query, choice, seed, config.update);
  return std::nullopt;
}

}  // namespace

void to_json(Json& j, const PendingQuestion& p) {
  j = Json{{"turn", p.turn},
           {"query", optional_json(p.query)},
           {"verbalized", optional_json(p.verbalized)},
           {"open_text", optional_json(p.open_text)},
           {"eig_bits", optional_json(p.eig_bits)},
           {"predictive_p_a", optional_json(p.predictive_p_a)},
           {"asked_at", p.asked_at}};
}

void from_json(const Json& j, PendingQuestion& p) {
  p.turn = j.at("turn").get<std::uint64_t>();
  p.query = optional_from<PairwiseQuery>(j, "query");
  p.verbalized = optional_from<VerbalizedQuestion>(j, "verbalized");
  p.open_text = optional_from<std::string>(j, "open_text");
  p.eig_bits = optional_from<double>(j, "eig_bits");
  p.predictive_p_a = optional_from<double>(j, "predictive_p_a");
  p.asked_at = j.value("asked_at", "");
}

void to_json(Json& j, const TranscriptEntry& e) {
  j = Json{{"turn", e.turn},
           {"query", optional_json(e.query)},
           {"verbalized", optional_json(e.verbalized)},
           {"question_text", optional_json(e.question_text)},
           {"response", response_json(e.response)},
           {"eig_bits", optional_json(e.eig_bits)},
           {"option_a_features", optional_json(e.option_a_features)},
           {"option_b_features", optional_json(e.option_b_features)},
           {"asked_at", e.asked_at},
           {"answered_at", e.answered_at},
           {"belief_after", optional_json(e.belief_after)}};
}

void from_json(const Json& j, TranscriptEntry& e) {
  e.turn = j.at("turn").get<std::uint64_t>();
  e.query = optional_from<PairwiseQuery>(j, "query");
  e.verbalized = optional_from<VerbalizedQuestion>(j, "verbalized");
  e.question_text = optional_from<std::string>(j, "question_text");
  e.response = response_from(j.at("response"));
  e.eig_bits = optional_from<double>(j, "eig_bits");
  e.option_a_features = optional_from<FeatureVector>(j, "option_a_features");
  e.option_b_features = optional_from<FeatureVector>(j, "option_b_features");
  e.asked_at = j.value("asked_at", "");
  e.answered_at = j.value("answered_at", "");
  e.belief_after = optional_from<BeliefSummary>(j, "belief_after");
}

void to_json(Json& j, const PredictionRecord& p) {
  j = Json{{"item_a", p.item_a},
           {"item_b", p.item_b},
           {"prediction", optional_json(p.prediction)},
           {"lm_confidence", optional_json(p.lm_confidence)},
           {"error", optional_json(p.error)},
           {"user_answer", optional_json(p.user_answer)}};
}

void from_json(const Json& j, PredictionRecord& p) {
  j.at("item_a").get_to(p.item_a);
  j.at("item_b").get_to(p.item_b);
  p.prediction = optional_from<Prediction>(j, "prediction");
  p.lm_confidence = optional_from<double>(j, "lm_confidence");
  p.error = optional_from<std::string>(j, "error");
  p.user_answer = optional_from<Choice>(j, "user_answer");
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::elicitation: return "elicitation";
    case Phase::prediction: return "prediction";
    case Phase::feature_ranking: return "feature_ranking";
    case Phase::done: return "done";
  }
  return "elicitation";
}

Phase phase_from_string(const std::string& text) {
  for (auto p : {Phase::elicitation, Phase::prediction, Phase::feature_ranking, Phase::done})
    if (to_string(p) == text) return p;
  throw ValidationError("unknown phase: " + text);
}

std::string to_string(SessionStrategy strategy) {
  switch (strategy) {
    case SessionStrategy::eig: return "eig";
    case SessionStrategy::lm_pairwise: return "lm_pairwise";
    case SessionStrategy::lm_openended: return "lm_openended";
    case SessionStrategy::self_mapping: return "self_mapping";
  }
  return "eig";
}

SessionStrategy session_strategy_from_string(const std::string& text) {
  for (auto s : {SessionStrategy::eig, SessionStrategy::lm_pairwise, SessionStrategy::lm_openended,
                 SessionStrategy::self_mapping})
    if (to_string(s) == text) return s;
  throw ValidationError("unknown strategy: " + text);
}

bool is_pairwise(SessionStrategy strategy) { return strategy != SessionStrategy::lm_openended; }
bool updates_belief(SessionStrategy strategy) { return strategy != SessionStrategy::lm_openended; }

void Session::validate() const {
  if (id.empty()) throw ValidationError("session id is empty");
  config.validate();
  if (features.dimension() != config.dimension) throw ValidationError("feature set dimension does not match config");
  belief.validate();
  if (belief.dimension() != features.dimension()) throw ValidationError("belief dimension does not match features");
  if (updates_belief(strategy) && belief.turn != transcript.size())
    throw ValidationError("belief turn does not match transcript length");
  std::set<PairwiseQuery> in_transcript;
  for (std::size_t i = 0; i < transcript.size(); ++i) {
    const auto& e = transcript[i];
    if (e.turn != i) throw ValidationError("transcript turns must be consecutive");
    if (is_pairwise(strategy) != has_choice(e)) throw ValidationError("response type does not match strategy");
    if (e.query && !in_transcript.insert(e.query->canonical()).second && config.exclude_asked)
      throw ValidationError("query appears in more than one transcript entry");
  }
  std::set<PairwiseQuery> asked_set(asked.begin(), asked.end());
  if (asked_set != in_transcript) throw ValidationError("asked set and transcript disagree");
  if (pending && phase != Phase::elicitation) throw ValidationError("pending question outside elicitation");
  if (pending && pending->turn != transcript.size()) throw ValidationError("pending question has the wrong turn");
  if (feature_ranking) {
    std::vector<int> sorted = *feature_ranking;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      if (sorted[i] != static_cast<int>(i)) throw ValidationError("feature ranking is not a permutation");
    if (sorted.size() != features.dimension()) throw ValidationError("feature ranking has the wrong length");
  }
}

std::vector<HistoryTurn> Session::history() const {
  std::vector<HistoryTurn> out;
  for (const auto& e : transcript) {
    HistoryTurn h;
    if (e.question_text) {
      h.question = *e.question_text;
    } else if (e.verbalized) {
      h.question = e.verbalized->question_text;
      if (!e.verbalized->fallback_rendering)
        h.question += " (Option A: " + e.verbalized->example_a + " OR Option B: " + e.verbalized->example_b + ")";
    }
    if (const auto* c = std::get_if<Choice>(&e.response)) {
      h.answer = "Option " + to_string(c->value);
    } else {
      h.answer = std::get<std::string>(e.response);
    }
    out.push_back(std::move(h));
  }
  return out;
}

void to_json(Json& j, const Session& s) {
  std::vector<PairwiseQuery> asked(s.asked.begin(), s.asked.end());
  j = Json{{"format", "openpref.session/1"},
           {"id", s.id},
           {"domain_description", s.domain_description},
           {"features", s.features},
           {"config", s.config},
           {"strategy", to_string(s.strategy)},
           {"phase", to_string(s.phase)},
           {"belief", s.belief},
           {"transcript", Json::array()},
           {"asked", asked},
           {"pending", s.pending ? Json(*s.pending) : Json(nullptr)},
           {"predictions", Json::array()},
           {"feature_ranking", optional_json(s.feature_ranking)},
           {"lm_calls", s.lm_calls},
           {"events", s.events},
           {"created_at", s.created_at},
           {"revision", s.revision}};
  for (const auto& e : s.transcript) j["transcript"].push_back(e);
  for (const auto& p : s.predictions) j["predictions"].push_back(p);
}

void from_json(const Json& j, Session& s) {
  s = Session{};
  j.at("id").get_to(s.id);
  s.domain_description = j.value("domain_description", "");
  s.features = j.at("features").get<FeatureSet>();
  s.config = j.at("config").get<SessionConfig>();
  s.strategy = session_strategy_from_string(j.at("strategy").get<std::string>());
  s.phase = phase_from_string(j.at("phase").get<std::string>());
  s.belief = j.at("belief").get<BeliefState>();
  for (const auto& e : j.at("transcript")) s.transcript.push_back(e.get<TranscriptEntry>());
  for (const auto& q : j.at("asked")) s.asked.insert(q.get<PairwiseQuery>());
  if (j.contains("pending") && !j.at("pending").is_null()) s.pending = j.at("pending").get<PendingQuestion>();
  if (j.contains("predictions"))
    for (const auto& p : j.at("predictions")) s.predictions.push_back(p.get<PredictionRecord>());
  s.feature_ranking = optional_from<std::vector<int>>(j, "feature_ranking");
  if (j.contains("lm_calls")) s.lm_calls = j.at("lm_calls").get<std::vector<LmCallRecord>>();
  if (j.contains("events")) s.events = j.at("events").get<std::vector<std::string>>();
  s.created_at = j.value("created_at", "");
  s.revision = j.value("revision", std::uint64_t{0});
}

std::vector<BeliefState> replay_trajectory(const Session& s) {
  std::vector<BeliefState> out;
  out.push_back(init_prior(s.features, s.config.prior, prior_seed(s.config.seed)));
  for (const auto& entry : s.transcript) {
    auto next = apply_entry(out.back(), entry, s.config);
    out.push_back(next ? std::move(*next) : out.back());
  }
  return out;
}

BeliefState replay_belief(const Json& document) {
  Session s;
  try {
    s = document.get<Session>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed session document: ") + e.what());
  }
  return std::move(replay_trajectory(s).back());
}

std::vector<TestCase> parse_test_cases(const Json& document) {
  const Json& list = document.is_object() && document.contains("tests") ? document.at("tests") : document;
  if (!list.is_array()) throw ValidationError("test file must be a JSON array of {item_a, item_b} records");
  std::vector<TestCase> tests;
  for (const auto& record : list) {
    if (!record.is_object() || !record.contains("item_a") || !record.contains("item_b"))
      throw ValidationError("each test case needs item_a and item_b");
    TestCase t;
    t.item_a = record.at("item_a").get<std::string>();
    t.item_b = record.at("item_b").get<std::string>();
    if (t.item_a.empty() || t.item_b.empty()) throw ValidationError("test items must be non-empty");
    if (record.contains("user_answer") && !record.at("user_answer").is_null())
      t.user_answer = record.at("user_answer").get<Choice>();
    tests.push_back(std::move(t));
  }
  if (tests.empty()) throw ValidationError("test file contains no test cases");
  return tests;
}

std::vector<TestCase> load_test_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open test file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_test_cases(parse_json(ss.str()));
  } catch (const ParseError& e) {
    throw ValidationError("invalid test file " + path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid test file " + path.string() + ": " + e.what());
  }
}

nlohmann::json summary_json(const BeliefSummary& summary, const FeatureSet& features) {
  Json per_feature = Json::array();
  for (std::size_t i = 0; i < summary.mean.size(); ++i)
    per_feature.push_back({{"rank", i},
                           {"description", features.description(i)},
                           {"mean", summary.mean[i]},
                           {"std", summary.std[i]}});
  return {{"turn", summary.turn}, {"effective_sample_size", summary.effective_sample_size}, {"features", per_feature}};
}

nlohmann::json question_payload(const Session& s) {
  Json out{{"session_id", s.id},
           {"phase", to_string(s.phase)},
           {"strategy", to_string(s.strategy)},
           {"turn", s.transcript.size()},
           {"turn_budget", s.config.turn_budget},
           {"question", nullptr}};
  if (s.config.time_limit_seconds) {
    out["time_limit_seconds"] = *s.config.time_limit_seconds;
    out["elapsed_seconds"] = seconds_since(s.created_at);
  }
  if (!s.pending) return out;
  const auto& p = *s.pending;
  Json q{{"turn", p.turn}, {"asked_at", p.asked_at}};
  if (p.open_text) {
    q["kind"] = "open_ended";
    q["text"] = *p.open_text;
  } else {
    q["kind"] = p.verbalized && p.verbalized->fallback_rendering ? "feature_lists" : "pairwise";
    q["text"] = p.verbalized->question_text;
    q["option_a"] = p.verbalized->example_a;
    q["option_b"] = p.verbalized->example_b;
    if (p.query) q["query"] = *p.query;
    if (p.eig_bits) q["eig_bits"] = *p.eig_bits;
    if (p.predictive_p_a) q["predictive_p_a"] = *p.predictive_p_a;
  }
  out["question"] = q;
  return out;
}

// ---------------------------------------------------------------------------

SessionService::SessionService(ServiceConfig config, std::shared_ptr<LmGateway> gateway)
    : config_(std::move(config)), gateway_(std::move(gateway)), store_(config_.data_dir) {
  config_.session.validate();
}

LmGateway& SessionService::require_gateway(const std::string& purpose) const {
  if (!gateway_) throw ConfigurationError("a chat client is required for " + purpose);
  return *gateway_;
}

const QuerySpace& SessionService::query_space(std::size_t d, std::size_t k) {
  std::lock_guard lock(spaces_mutex_);
  auto& space = spaces_[{d, k}];
  if (!space) space = std::make_unique<QuerySpace>(enumerate_queries(d, k));
  return *space;
}

std::shared_ptr<SessionService::Slot> SessionService::slot(const std::string& id) {
  std::lock_guard lock(slots_mutex_);
  if (auto it = slots_.find(id); it != slots_.end()) return it->second;
  if (!store_.exists(id)) throw NotFoundError("no session with id " + id);
  auto s = std::make_shared<Slot>();
  s->session = store_.load(id);
  slots_.emplace(id, s);
  return s;
}

std::unique_lock<std::shared_mutex> SessionService::lock_exclusive(Slot& s) {
  if (config_.busy_policy == BusyPolicy::fail_fast) {
    std::unique_lock lock(s.mutex, std::try_to_lock);
    if (!lock.owns_lock()) throw BusyError("session is busy with another request");
    return lock;
  }
  return std::unique_lock(s.mutex);
}

std::shared_lock<std::shared_mutex> SessionService::lock_shared(Slot& s) {
  if (config_.busy_policy == BusyPolicy::fail_fast) {
    std::shared_lock lock(s.mutex, std::try_to_lock);
    if (!lock.owns_lock()) throw BusyError("session is busy with another request");
    return lock;
  }
  return std::shared_lock(s.mutex);
}

// Persists first; the in-memory session only changes once the write landed.
void SessionService::commit(Slot& s, Session updated) {
  ++updated.revision;
  updated.validate();
  store_.save(updated);
  s.session = std::move(updated);
}

Session SessionService::create_session(const std::string& domain_description, SessionStrategy strategy,
                                       std::optional<SessionConfig> config, std::optional<FeatureSet> features) {
  Session s;
  s.config = config.value_or(config_.session);
  s.config.validate();
  s.strategy = strategy;
  s.domain_description = domain_description;
  if (s.domain_description.empty())
    s.domain_description = config_.domain_description.empty() ? std::string(kDefaultDomainDescription)
                                                              : config_.domain_description;
  if (strategy == SessionStrategy::lm_pairwise || strategy == SessionStrategy::lm_openended)
    require_gateway("strategy " + to_string(strategy));

  CallLog log;
  if (features) {
    s.features = std::move(*features);
  } else {
    s.features = require_gateway("feature extraction").extract_features(s.domain_description, s.config.dimension, &log);
  }
  if (s.features.dimension() != s.config.dimension)
    throw ValidationError("feature set dimension does not match configured d");

  s.id = new_session_id();
  s.belief = init_prior(s.features, s.config.prior, prior_seed(s.config.seed));
  s.phase = Phase::elicitation;
  s.created_at = now_iso8601();
  s.lm_calls = std::move(log.calls);
  s.events = std::move(log.warnings);
  s.events.push_back("created with strategy " + to_string(strategy));

  auto slot = std::make_shared<Slot>();
  commit(*slot, std::move(s));
  std::lock_guard lock(slots_mutex_);
  slots_[slot->session.id] = slot;
  return slot->session;
}

nlohmann::json SessionService::next_question(const std::string& id) {
  auto sl = slot(id);
  auto lock = lock_exclusive(*sl);
  const Session& current = sl->session;
  if (current.phase != Phase::elicitation)
    throw OrderingError("session is in the " + to_string(current.phase) + " phase");
  if (current.pending) return question_payload(current);

  Session s = current;
  auto end_elicitation = [&](const std::string& reason) {
    s.phase = Phase::prediction;
    s.events.push_back("elicitation ended: " + reason);
    commit(*sl, std::move(s));
    return question_payload(sl->session);
  };
  if (s.transcript.size() >= s.config.turn_budget) return end_elicitation("turn budget reached");
  if (s.config.time_limit_seconds && seconds_since(s.created_at) >= *s.config.time_limit_seconds)
    return end_elicitation("time limit reached");

  CallLog log;
  PendingQuestion p;
  p.turn = s.transcript.size();
  switch (s.strategy) {
    case SessionStrategy::eig:
    case SessionStrategy::self_mapping: {
      const auto& space = query_space(s.config.dimension, s.config.k);
      ScoredQuery best;
      try {
        best = select_optimal_query(s.belief, space, s.config.exclude_asked ? s.asked : QuerySet{});
      } catch (const QuerySpaceExhausted&) {
        return end_elicitation("query space exhausted");
      }
      p.query = best.query;
      p.eig_bits = best.eig_bits;
      p.predictive_p_a = best.predictive_p_a;
      if (s.strategy == SessionStrategy::self_mapping) {
        p.verbalized = self_mapping_rendering(best.query, s.features);
      } else if (!gateway_) {
        p.verbalized = self_mapping_rendering(best.query, s.features);
        s.events.push_back("turn " + std::to_string(p.turn) + ": no chat client, feature-list rendering used");
      } else {
        try {
          p.verbalized = gateway_->verbalize_query(best.query, s.features, &log);
        } catch (const LmOutputError& e) {
          p.verbalized = self_mapping_rendering(best.query, s.features);
          s.events.push_back("turn " + std::to_string(p.turn) + ": verbalization failed (" + e.what() +
                             "), feature-list rendering used");
        }
      }
      break;
    }
    case SessionStrategy::lm_pairwise:
      p.verbalized = require_gateway("lm_pairwise").lm_pairwise_question(s.history(), &s.features, &log);
      break;
    case SessionStrategy::lm_openended:
      p.open_text = require_gateway("lm_openended").lm_openended_question(s.history(), &log);
      break;
  }
  p.asked_at = now_iso8601();
  s.pending = std::move(p);
  s.lm_calls.insert(s.lm_calls.end(), log.calls.begin(), log.calls.end());
  s.events.insert(s.events.end(), log.warnings.begin(), log.warnings.end());
  commit(*sl, std::move(s));
  return question_payload(sl->session);
}

BeliefSummary SessionService::submit_answer(const std::string& id, const UserResponse& response) {
  auto sl = slot(id);
  auto lock = lock_exclusive(*sl);
  const Session& current = sl->session;
  if (current.phase != Phase::elicitation)
    throw OrderingError("session is in the " + to_string(current.phase) + " phase");
  if (!current.pending) throw OrderingError("no pending question to answer");
  const bool got_choice = std::holds_alternative<Choice>(response);
  if (is_pairwise(current.strategy) != got_choice)
    throw ValidationError(is_pairwise(current.strategy) ? "this strategy expects a choice (A or B)"
                                                        : "this strategy expects a free-text answer");
  if (!got_choice && std::get<std::string>(response).empty()) throw ValidationError("answer text is empty");

  Session s = current;
  const PendingQuestion p = *s.pending;
  CallLog log;
  TranscriptEntry entry;
  entry.turn = p.turn;
  entry.query = p.query;
  entry.verbalized = p.verbalized;
  entry.question_text = p.open_text;
  entry.response = got_choice ? UserResponse(Choice{std::get<Choice>(response).value, false}) : response;
  entry.eig_bits = p.eig_bits;
  entry.asked_at = p.asked_at;
  entry.answered_at = now_iso8601();
  if (s.strategy == SessionStrategy::lm_pairwise) {
    auto& gw = require_gateway("lm_pairwise");
    entry.option_a_features = gw.featurize_item(p.verbalized->example_a, s.features, &log);
    entry.option_b_features = gw.featurize_item(p.verbalized->example_b, s.features, &log);
  }
  if (auto next = apply_entry(s.belief, entry, s.config)) s.belief = std::move(*next);
  if (updates_belief(s.strategy)) entry.belief_after = summarize(s.belief);
  if (entry.query) s.asked.insert(*entry.query);
  s.transcript.push_back(std::move(entry));
  s.pending.reset();
  s.lm_calls.insert(s.lm_calls.end(), log.calls.begin(), log.calls.end());
  s.events.insert(s.events.end(), log.warnings.begin(), log.warnings.end());
  if (s.transcript.size() >= s.config.turn_budget) {
    s.phase = Phase::prediction;
    s.events.push_back("elicitation ended: turn budget reached");
  }
  commit(*sl, std::move(s));
  return summarize(sl->session.belief);
}

std::vector<PredictionRecord> SessionService::predict_testcases(const std::string& id, std::vector<TestCase> tests) {
  if (tests.empty()) throw ValidationError("no test cases supplied");
  auto sl = slot(id);
  std::vector<PredictionRecord> records;
  CallLog log;
  {
    auto lock = lock_shared(*sl);
    const Session& s = sl->session;
    if (s.phase != Phase::elicitation && s.phase != Phase::prediction)
      throw OrderingError("predictions are only available during elicitation or prediction");
    auto& gw = require_gateway("test-case prediction");
    const auto history = s.history();
    for (auto& t : tests) {
      PredictionRecord r{t.item_a, t.item_b, std::nullopt, std::nullopt, std::nullopt, t.user_answer};
      try {
        if (updates_belief(s.strategy)) {
          t.features_a = gw.featurize_item(t.item_a, s.features, &log);
          t.features_b = gw.featurize_item(t.item_b, s.features, &log);
          r.prediction = predict_choice(s.belief, t);
        } else if (auto guess = gw.lm_predict(history, t.item_a, t.item_b, &log)) {
          const double p_a = guess->guess.value == ChoiceValue::A ? guess->confidence : 1.0 - guess->confidence;
          r.prediction = Prediction{guess->guess, p_a};
          r.lm_confidence = guess->confidence;
        } else {
          r.error = "LM prediction abstained";
        }
      } catch (const LmOutputError& e) {
        r.error = e.what();
      }
      records.push_back(std::move(r));
    }
  }
  auto lock = lock_exclusive(*sl);
  Session s = sl->session;
  s.predictions = records;
  s.lm_calls.insert(s.lm_calls.end(), log.calls.begin(), log.calls.end());
  s.events.insert(s.events.end(), log.warnings.begin(), log.warnings.end());
  commit(*sl, std::move(s));
  return records;
}

void SessionService::finish_elicitation(const std::string& id) {
  auto sl = slot(id);
  auto lock = lock_exclusive(*sl);
  if (sl->session.phase != Phase::elicitation) throw OrderingError("session is not in the elicitation phase");
  Session s = sl->session;
  s.phase = Phase::prediction;
  s.pending.reset();
  s.events.push_back("elicitation ended: requested");
  commit(*sl, std::move(s));
}

nlohmann::json SessionService::record_test_answers(const std::string& id, const std::vector<Choice>& answers) {
  auto sl = slot(id);
  auto lock = lock_exclusive(*sl);
  Session s = sl->session;
  if (s.phase == Phase::elicitation) {
    s.phase = Phase::prediction;
    s.pending.reset();
  }
  if (s.phase != Phase::prediction) throw OrderingError("test answers can only be recorded in the prediction phase");
  if (s.predictions.empty()) throw OrderingError("request predictions for the test cases first");
  if (answers.size() != s.predictions.size())
    throw ValidationError("expected " + std::to_string(s.predictions.size()) + " answers");
  std::size_t scored = 0, correct = 0;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    s.predictions[i].user_answer = Choice{answers[i].value, false};
    if (!s.predictions[i].prediction) continue;
    ++scored;
    if (s.predictions[i].prediction->choice.same_side(answers[i])) ++correct;
  }
  s.phase = Phase::feature_ranking;
  commit(*sl, std::move(s));
  Json out{{"phase", to_string(Phase::feature_ranking)}, {"scored", scored}, {"correct", correct}};
  out["accuracy"] = scored ? Json(static_cast<double>(correct) / static_cast<double>(scored)) : Json(nullptr);
  return out;
}

void SessionService::record_feature_ranking(const std::string& id, const std::vector<int>& order) {
  auto sl = slot(id);
  auto lock = lock_exclusive(*sl);
  Session s = sl->session;
  if (s.phase != Phase::feature_ranking) throw OrderingError("session is not in the feature_ranking phase");
  s.feature_ranking = order;
  s.phase = Phase::done;
  try {
    commit(*sl, std::move(s));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("invalid feature ranking: ") + e.what());
  }
}

nlohmann::json SessionService::export_transcript(const std::string& id) {
  auto sl = slot(id);
  auto lock = lock_shared(*sl);
  return Json(sl->session);
}

nlohmann::json SessionService::state(const std::string& id) {
  auto sl = slot(id);
  auto lock = lock_shared(*sl);
  const Session& s = sl->session;
  return {{"id", s.id},
          {"phase", to_string(s.phase)},
          {"strategy", to_string(s.strategy)},
          {"domain_description", s.domain_description},
          {"features", s.features},
          {"turn", s.transcript.size()},
          {"turn_budget", s.config.turn_budget},
          {"has_pending_question", s.pending.has_value()},
          {"predictions", s.predictions.size()},
          {"created_at", s.created_at},
          {"revision", s.revision}};
}

nlohmann::json SessionService::belief(const std::string& id) {
  auto sl = slot(id);
  auto lock = lock_shared(*sl);
  const Session& s = sl->session;
  return {{"summary", summary_json(summarize(s.belief), s.features)}, {"belief", s.belief}};
}

nlohmann::json SessionService::query_scores(const std::string& id) {
  auto sl = slot(id);
  auto lock = lock_shared(*sl);
  const Session& s = sl->session;
  const auto scored = score_queries(s.belief, query_space(s.config.dimension, s.config.k));
  Json rows = Json::array();
  for (const auto& q : scored) {
    Json row = q;
    row["asked"] = s.asked.contains(q.query);
    rows.push_back(std::move(row));
  }
  return {{"turn", s.belief.turn}, {"scores", rows}};
}

Session SessionService::snapshot(const std::string& id) {
  auto sl = slot(id);
  auto lock = lock_shared(*sl);
  return sl->session;
}

}  // namespace openpref
