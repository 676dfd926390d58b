#include "openpref/chat_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "openpref/errors.hpp"
#include "openpref/hashing.hpp"
#include "openpref/prompts.hpp"

namespace openpref {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Text between `open` and the next `close`, or empty.
std::string between(const std::string& text, std::string_view open, std::string_view close) {
  const auto b = text.find(open);
  if (b == std::string::npos) return {};
  const auto start = b + open.size();
  const auto e = text.find(close, start);
  return text.substr(start, e == std::string::npos ? std::string::npos : e - start);
}

std::uint64_t stable_hash(const std::string& text) {
  return std::stoull(sha256_hex(text).substr(0, 15), nullptr, 16);
}

const std::vector<std::string>& mock_topics() {
  static const std::vector<std::string> topics = {
      "science", "politics", "technology", "sports", "health",    "business",
      "arts",    "food",     "travel",     "climate", "education", "history",
  };
  return topics;
}

std::string mock_feature(const std::string& topic) { return "coverage of " + topic; }

// Last word of a feature description, used as a crude topic keyword.
std::string keyword_of(const std::string& description) {
  const auto t = trim(description);
  const auto space = t.find_last_of(' ');
  return lowercase(space == std::string::npos ? t : t.substr(space + 1));
}

std::vector<std::string> numbered_lines(const std::string& block) {
  std::vector<std::string> out;
  std::istringstream in(block);
  std::string line;
  while (std::getline(in, line)) {
    const auto paren = line.find(") ");
    if (paren != std::string::npos && paren > 0 &&
        std::all_of(line.begin(), line.begin() + static_cast<long>(paren),
                    [](unsigned char c) { return std::isdigit(c); }))
      out.push_back(trim(line.substr(paren + 2)));
  }
  return out;
}

std::string synth_extract(const std::string& prompt) {
  std::size_t n = 10;
  const auto count = between(prompt, "Enumerate ", " binary topics");
  if (!count.empty() && std::all_of(count.begin(), count.end(), ::isdigit)) n = std::stoul(count);
  n = std::min(n, mock_topics().size());
  std::string out;
  for (std::size_t i = 0; i < n; ++i)
    out += std::to_string(i + 1) + ") " + mock_feature(mock_topics()[i]) + "\n";
  return out;
}

std::string synth_verbalize(const std::string& prompt) {
  auto a = trim(between(prompt, "Option A: an article with ", "\nOR\n"));
  auto b = trim(between(prompt, "\nOR\nOption B: ", "?\"."));
  const std::string prefix = "an article with ";
  if (b.rfind(prefix, 0) == 0) b = b.substr(prefix.size());
  return "Option A: Inside the week's news - a report on " + a +
         ".\nOR\nOption B: Behind the headlines - a feature on " + b + ".";
}

std::string synth_featurize(const std::string& prompt) {
  const auto features = numbered_lines(between(prompt, "kinds of articles:\n", "\n\n"));
  const auto item = lowercase(between(prompt, "Article: ", "\n\nGive ONLY"));
  std::string out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto key = keyword_of(features[i]);
    double value;
    if (!key.empty() && item.find(key) != std::string::npos) {
      value = 0.9;
    } else {
      value = static_cast<double>(stable_hash(item + "|" + features[i]) % 31) / 100.0;
    }
    std::ostringstream line;
    line << (i + 1) << ") " << value << "\n";
    out += line.str();
  }
  return out;
}

std::vector<std::string> inline_features(const std::string& prompt) {
  const auto list = between(prompt, "different kinds of articles: ", ".\n");
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < list.size()) {
    const auto sep = list.find("; ", start);
    out.push_back(trim(list.substr(start, sep == std::string::npos ? std::string::npos : sep - start)));
    if (sep == std::string::npos) break;
    start = sep + 2;
  }
  return out;
}

std::string synth_pairwise(const std::string& prompt, bool with_features) {
  std::vector<std::string> features = with_features ? inline_features(prompt) : std::vector<std::string>{};
  if (features.size() < 2)
    for (const auto& t : mock_topics()) features.push_back(mock_feature(t));
  const auto h = stable_hash(prompt);
  const std::size_t i = h % features.size();
  std::size_t j = (h / features.size()) % (features.size() - 1);
  if (j >= i) ++j;
  if (!with_features) {
    return "Would you prefer\nOption A: an article with " + features[i] + "\nOR\nOption B: an article with " +
           features[j] + "?";
  }
  return "Would you prefer Option A: an article with " + features[i] + "\nOR\nOption B: an article with " +
         features[j] + "?\n\nFor example: A new look at " + features[i] + "\nOR\nOption B: A new look at " +
         features[j];
}

std::string synth_openended(const std::string& prompt) {
  const auto& topics = mock_topics();
  const auto topic = topics[stable_hash(prompt) % topics.size()];
  return "Question: How do you feel about reading articles on " + topic + ", and why?";
}

std::string synth_predict(const std::string& prompt) {
  const auto prefs = lowercase(between(prompt, "in a conversation below:\n", "\n\nThe question is:"));
  const auto a = lowercase(between(prompt, "\n\nOption A: ", "\nOR\n"));
  const auto b = lowercase(between(prompt, "\nOR\nOption B: ", "\x01"));
  auto score = [&](const std::string& item) {
    int s = 0;
    for (const auto& t : mock_topics()) {
      if (item.find(t) == std::string::npos) continue;
      for (auto p = prefs.find(t); p != std::string::npos; p = prefs.find(t, p + 1)) ++s;
    }
    return s;
  };
  const int sa = score(a);
  const int sb = score(b);
  const bool pick_a = sa != sb ? sa > sb : stable_hash(prompt) % 2 == 0;
  const double p = sa != sb ? 0.7 : 0.55;
  std::ostringstream out;
  out << "Guess: Option " << (pick_a ? "A" : "B") << "\nProbability: " << p;
  return out.str();
}

}  // namespace

std::string ChatRequest::prompt_text() const {
  std::string text;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (i > 0) text += "\n\n";
    text += messages[i].content;
  }
  return text;
}

std::string prompt_fingerprint(const std::string& prompt_text) { return sha256_hex(prompt_text); }

std::string synthesize_response(const ChatRequest& request) {
  const auto prompt = request.prompt_text();
  const auto name = prompt_name_from_string(request.template_name);
  switch (name) {
    case PromptName::extract_features: return synth_extract(prompt);
    case PromptName::verbalize_query: return synth_verbalize(prompt);
    case PromptName::featurize_item: return synth_featurize(prompt);
    case PromptName::lm_pairwise: return synth_pairwise(prompt, false);
    case PromptName::lm_pairwise_with_features: return synth_pairwise(prompt, true);
    case PromptName::lm_openended: return synth_openended(prompt);
    case PromptName::lm_predict: return synth_predict(prompt);
  }
  throw ContractViolation("unknown prompt");
}

MockChatClient::MockChatClient(std::optional<std::filesystem::path> fixture_dir, bool synthesize)
    : fixture_dir_(std::move(fixture_dir)), synthesize_(synthesize) {
  if (fixture_dir_ && !std::filesystem::is_directory(*fixture_dir_))
    throw ConfigurationError("mock fixture directory does not exist: " + fixture_dir_->string());
}

ChatResponse MockChatClient::complete(const ChatRequest& request) {
  const auto start = Clock::now();
  ++calls_;
  if (fixture_dir_) {
    if (auto hit = read_file(*fixture_dir_ / (prompt_fingerprint(request.prompt_text()) + ".txt")))
      return {*hit, elapsed_ms(start)};
    if (!request.template_name.empty()) {
      if (auto hit = read_file(*fixture_dir_ / (request.template_name + ".txt"))) return {*hit, elapsed_ms(start)};
    }
  }
  if (!synthesize_)
    throw TransportError("mock client has no fixture for prompt " + prompt_fingerprint(request.prompt_text()));
  return {synthesize_response(request), elapsed_ms(start)};
}

RemoteChatClient::RemoteChatClient(RemoteClientConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw ConfigurationError("remote client needs an endpoint URL");
  if (config_.transport_attempts < 1) throw ConfigurationError("transport_attempts must be at least 1");
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

ChatResponse RemoteChatClient::complete(const ChatRequest& request) {
  const auto start = Clock::now();
  nlohmann::json body;
  body["model"] = config_.model;
  body["temperature"] = request.temperature;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  httplib::Client client(config_.base_url);
  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  httplib::Result result;
  for (int attempt = 1;; ++attempt) {
    result = client.Post(config_.path, headers, body.dump(), "application/json");
    const bool retryable = !result || result->status == 429 || result->status >= 500;
    if (!retryable || attempt >= config_.transport_attempts) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(250 * attempt));
  }
  if (!result) throw TransportError("chat request failed: " + httplib::to_string(result.error()));
  if (result->status != 200)
    throw TransportError("chat endpoint returned HTTP " + std::to_string(result->status) + ": " + result->body);
  try {
    const auto reply = nlohmann::json::parse(result->body);
    return {reply.at("choices").at(0).at("message").at("content").get<std::string>(), elapsed_ms(start)};
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed chat completion response: ") + e.what());
  }
}

}  // namespace openpref
