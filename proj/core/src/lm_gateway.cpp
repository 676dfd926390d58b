#include "openpref/lm_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <sstream>

#include "openpref/errors.hpp"
#include "openpref/hashing.hpp"
#include "openpref/prompts.hpp"

namespace openpref {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Removes one layer of surrounding [brackets] and a trailing '?'.
std::string clean_example(std::string s) {
  s = trim(s);
  if (!s.empty() && s.back() == '?') s.pop_back();
  s = trim(s);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = trim(s.substr(1, s.size() - 2));
  return s;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

const std::regex& numbered_line() {
  static const std::regex re(R"(^\s*(\d+)\s*[\)\.:]\s*(.*\S)\s*$)");
  return re;
}

std::string numbered_features(const FeatureSet& features) {
  std::string out;
  for (const auto& f : features.features()) {
    if (!out.empty()) out += '\n';
    out += std::to_string(f.rank + 1) + ") " + f.description;
  }
  return out;
}

std::string inline_features(const FeatureSet& features) {
  std::string out;
  for (const auto& f : features.features()) {
    if (!out.empty()) out += "; ";
    out += f.description;
  }
  return out;
}

}  // namespace

std::vector<std::string> parse_numbered_list(const std::string& text) {
  std::vector<std::string> items;
  std::smatch m;
  for (const auto& line : lines_of(text)) {
    if (std::regex_match(line, m, numbered_line())) items.push_back(trim(m[2].str()));
  }
  return items;
}

std::optional<std::vector<double>> parse_numeric_list(const std::string& text, std::size_t expected) {
  const auto items = parse_numbered_list(text);
  if (items.size() != expected) return std::nullopt;
  std::vector<double> values;
  values.reserve(items.size());
  for (const auto& item : items) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str()) return std::nullopt;
    values.push_back(v);
  }
  return values;
}

std::optional<OptionPair> parse_option_pair(const std::string& text) {
  const auto a = text.find("Option A:");
  const auto b = text.rfind("Option B:");
  if (a == std::string::npos || b == std::string::npos || b < a) return std::nullopt;

  OptionPair out;
  const auto example = text.find("For example:");
  if (example != std::string::npos && example > a && example < b) {
    // Feature-grounded format: abstract question, then concrete examples.
    out.question_text = trim(text.substr(0, example));
    const auto start = example + std::string_view("For example:").size();
    auto stop = text.find("\nOR", start);
    if (stop == std::string::npos || stop > b) stop = b;
    out.example_a = clean_example(text.substr(start, stop - start));
  } else {
    out.question_text = trim(text);
    const auto start = a + std::string_view("Option A:").size();
    auto stop = text.find("\nOR", start);
    if (stop == std::string::npos || stop > b) stop = b;
    out.example_a = clean_example(text.substr(start, stop - start));
  }
  out.example_b = clean_example(text.substr(b + std::string_view("Option B:").size()));
  if (out.example_a.empty() || out.example_b.empty()) return std::nullopt;
  return out;
}

std::optional<std::string> parse_question_line(const std::string& text) {
  const auto pos = text.find("Question:");
  if (pos == std::string::npos) return std::nullopt;
  const auto rest = text.substr(pos + std::string_view("Question:").size());
  for (const auto& line : lines_of(rest)) {
    auto t = trim(line);
    if (!t.empty()) return t;
  }
  return std::nullopt;
}

std::optional<GuessWithProbability> parse_guess(const std::string& text, std::vector<std::string>* warnings) {
  static const std::regex guess_re(R"(Guess:\s*(?:Option\s*)?([AB])\b)", std::regex::icase);
  static const std::regex prob_re(R"(Probability:\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?))",
                                  std::regex::icase);
  std::smatch g;
  std::smatch p;
  if (!std::regex_search(text, g, guess_re) || !std::regex_search(text, p, prob_re)) return std::nullopt;
  GuessWithProbability out;
  out.guess = Choice{choice_value_from_string(g[1].str()), false};
  double confidence = std::strtod(p[1].str().c_str(), nullptr);
  if (!std::isfinite(confidence)) return std::nullopt;
  if (confidence < 0.0 || confidence > 1.0) {
    if (warnings) warnings->push_back("lm_predict probability " + p[1].str() + " clamped into [0, 1]");
    confidence = std::clamp(confidence, 0.0, 1.0);
  }
  out.confidence = confidence;
  return out;
}

std::string format_history(std::span<const HistoryTurn> history) {
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto n = std::to_string(i + 1);
    out += "\nQ" + n + ": " + history[i].question + "\nA" + n + ": " + history[i].answer;
  }
  return out;
}

std::string describe_option(const OptionVector& option, const FeatureSet& features) {
  require(option.dimension() == features.dimension(), "option dimension does not match feature set");
  std::string out;
  for (auto i : option.active_indices()) {
    if (!out.empty()) out += " and ";
    out += features.description(i);
  }
  return out;
}

VerbalizedQuestion self_mapping_rendering(const PairwiseQuery& query, const FeatureSet& features) {
  auto render = [&](const OptionVector& option) {
    std::string out;
    for (std::size_t i = 0; i < option.dimension(); ++i) {
      if (!out.empty()) out += "\n";
      out += (option.bits()[i] ? "[x] " : "[ ] ") + features.description(i);
    }
    return out;
  };
  VerbalizedQuestion q;
  q.question_text =
      "Which article would you prefer? Each option is an article with the checked features (1) and without the "
      "unchecked ones (0).";
  q.example_a = render(query.option_a());
  q.example_b = render(query.option_b());
  q.source_query = query;
  q.fallback_rendering = true;
  return q;
}

LmGateway::LmGateway(std::shared_ptr<ChatClient> client, GatewayOptions options)
    : client_(std::move(client)), options_(options) {
  require(client_ != nullptr, "LmGateway needs a chat client");
  require(options_.max_attempts >= 1, "LmGateway needs at least one attempt");
}

template <typename T, typename Parser>
std::optional<T> LmGateway::ask(const std::string& template_name, const std::string& prompt, Parser parse,
                                CallLog* log, std::string* last_response) {
  ChatRequest request{template_name, {{"user", prompt}}, 0.0};
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    const auto response = client_->complete(request);
    std::optional<T> parsed = parse(response.content);
    if (log) log->calls.push_back({template_name, prompt, response.content, response.latency_ms, attempt, parsed.has_value()});
    if (last_response) *last_response = response.content;
    if (parsed) return parsed;
  }
  return std::nullopt;
}

FeatureSet LmGateway::extract_features(const std::string& domain_description, std::size_t dimension, CallLog* log) {
  auto domain = trim(domain_description);
  require(!domain.empty(), "extract_features: empty domain description");
  require(dimension >= 2, "extract_features: need at least 2 features");
  while (!domain.empty() && domain.back() == '.') domain.pop_back();
  const auto prompt = render_prompt(PromptName::extract_features,
                                    {{"domain_description", domain}, {"num_features", std::to_string(dimension)}});
  std::string raw;
  auto items = ask<std::vector<std::string>>(
      to_string(PromptName::extract_features), prompt,
      [&](const std::string& text) -> std::optional<std::vector<std::string>> {
        auto list = parse_numbered_list(text);
        if (list.size() != dimension) return std::nullopt;
        return list;
      },
      log, &raw);
  if (!items)
    throw LmOutputError("extraction_error",
                        "expected " + std::to_string(dimension) + " numbered features from the LM", raw);
  return FeatureSet::from_descriptions(*items);
}

VerbalizedQuestion LmGateway::verbalize_query(const PairwiseQuery& query, const FeatureSet& features, CallLog* log) {
  require(query.dimension() == features.dimension(), "verbalize_query: dimension mismatch");
  const auto a = describe_option(query.option_a(), features);
  const auto b = "an article with " + describe_option(query.option_b(), features);
  const auto prompt =
      render_prompt(PromptName::verbalize_query, {{"pairwise_comparison_0", a}, {"pairwise_comparison_1", b}});
  std::string raw;
  auto pair = ask<OptionPair>(to_string(PromptName::verbalize_query), prompt, parse_option_pair, log, &raw);
  if (!pair) throw LmOutputError("verbalization_error", "LM response lacks Option A / Option B examples", raw);
  VerbalizedQuestion out;
  out.question_text = "Would you prefer Option A: an article with " + a + " OR Option B: " + b + "?";
  out.example_a = pair->example_a;
  out.example_b = pair->example_b;
  out.source_query = query;
  return out;
}

FeatureVector LmGateway::featurize_item(const std::string& item, const FeatureSet& features, CallLog* log) {
  require(!trim(item).empty(), "featurize_item: empty item");
  const auto key = sha256_hex(item) + ":" + features.fingerprint();
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = featurize_cache_.find(key); it != featurize_cache_.end()) {
      ++cache_hits_;
      return it->second;
    }
  }
  const auto prompt = render_prompt(PromptName::featurize_item,
                                    {{"num_features", std::to_string(features.dimension())},
                                     {"features", numbered_features(features)},
                                     {"item", item}});
  std::string raw;
  const std::size_t d = features.dimension();
  auto values = ask<std::vector<double>>(
      to_string(PromptName::featurize_item), prompt,
      [d](const std::string& text) { return parse_numeric_list(text, d); }, log, &raw);
  if (!values) throw LmOutputError("featurization_error", "could not parse feature values for item", raw);
  auto report = featurize_clamp(*values, d);
  if (log) {
    for (auto i : report.replaced_non_finite)
      log->warnings.push_back("featurize_item: non-finite value for feature " + std::to_string(i) + " replaced by 0.5");
    for (auto i : report.clamped)
      log->warnings.push_back("featurize_item: value for feature " + std::to_string(i) + " clamped into [0, 1]");
  }
  std::lock_guard lock(cache_mutex_);
  return featurize_cache_.emplace(key, std::move(report.vector)).first->second;
}

VerbalizedQuestion LmGateway::lm_pairwise_question(std::span<const HistoryTurn> history, const FeatureSet* features,
                                                   CallLog* log) {
  const auto name = features ? PromptName::lm_pairwise_with_features : PromptName::lm_pairwise;
  std::map<std::string, std::string> values{{"interaction_history_formatted", format_history(history)}};
  if (features) {
    values["num_features"] = std::to_string(features->dimension());
    values["features"] = inline_features(*features);
  }
  const auto prompt = render_prompt(name, values);
  std::string raw;
  auto pair = ask<OptionPair>(to_string(name), prompt, parse_option_pair, log, &raw);
  if (!pair) throw LmOutputError("baseline_strategy_error", "LM pairwise question could not be parsed", raw);
  return {pair->question_text, pair->example_a, pair->example_b, std::nullopt, false};
}

std::string LmGateway::lm_openended_question(std::span<const HistoryTurn> history, CallLog* log) {
  const auto prompt =
      render_prompt(PromptName::lm_openended, {{"interaction_history_formatted", format_history(history)}});
  std::string raw;
  auto q = ask<std::string>(to_string(PromptName::lm_openended), prompt, parse_question_line, log, &raw);
  if (!q) throw LmOutputError("baseline_strategy_error", "LM response lacks a \"Question:\" line", raw);
  return *q;
}

std::optional<GuessWithProbability> LmGateway::lm_predict(std::span<const HistoryTurn> history,
                                                          const std::string& item_a, const std::string& item_b,
                                                          CallLog* log) {
  const auto prompt = render_prompt(
      PromptName::lm_predict,
      {{"preferences", format_history(history)}, {"test_case_0", item_a}, {"test_case_1", item_b}});
  std::vector<std::string> warnings;
  auto guess = ask<GuessWithProbability>(
      to_string(PromptName::lm_predict), prompt,
      [&](const std::string& text) { return parse_guess(text, &warnings); }, log, nullptr);
  if (log) {
    log->warnings.insert(log->warnings.end(), warnings.begin(), warnings.end());
    if (!guess) log->warnings.push_back("lm_predict: unparseable response, counted as abstention");
  }
  return guess;
}

std::size_t LmGateway::cache_size() const {
  std::lock_guard lock(cache_mutex_);
  return featurize_cache_.size();
}

std::size_t LmGateway::cache_hits() const {
  std::lock_guard lock(cache_mutex_);
  return cache_hits_;
}

}  // namespace openpref
