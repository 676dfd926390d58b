#include "openpref/prompts.hpp"

#include <algorithm>
#include <set>

#include "openpref/errors.hpp"

namespace openpref {

namespace {

constexpr std::string_view k_lm_openended = R"PROMPT(Your task is to learn what topics a user is interested in reading online articles about. People's interests are broad, so you should seek to understand their interests across many topics; in other words, go for breadth rather than depth. Do not assume a user has given a complete answer to any question, so make sure to keep probing different types of interests.

Previous questions: {interaction_history_formatted}.

Generate the most informative open-ended question that, when answered, will reveal the most about the desired behavior beyond what has already been queried for above. Make sure your question addresses different aspects of their preferences than the questions that have already been asked. At the same time however, the question should be bite-sized, and not ask for too much at once. Phrase your question in a way that is understandable to non-expert humans; do not use any jargon without explanation. Generate the question and nothing else.

Provide your output in the format:

Question: <question>)PROMPT";

constexpr std::string_view k_lm_pairwise = R"PROMPT(Your task is to learn what topics a user is interested in reading online articles about. People's interests are broad, so you should seek to understand their interests across many topics; in other words, go for breadth rather than depth. Do not assume a user has given a complete answer to any question, so make sure to keep probing different types of interests.

Previous questions: {interaction_history_formatted}.

Generate the most informative pairwise comparison question that, when answered, will reveal the most about the desired behavior beyond what has already been queried for above. Make sure your question addresses different aspects of their preferences than the questions that have already been asked. At the same time however, the question should be bite-sized, and not ask for too much at once. Phrase your question in a way that is understandable to non-expert humans; do not use any jargon without explanation. Generate the pairwise comparison question and nothing else.

Provide your output in the format:

Would you prefer
Option A: <first article option>
OR
Option B: <second article option>?)PROMPT";

constexpr std::string_view k_lm_pairwise_with_features = R"PROMPT(Your task is to learn what topics a user is interested in reading online articles about. People's interests are broad, so you should seek to understand their interests across many topics; in other words, go for breadth rather than depth. Do not assume a user has given a complete answer to any question, so make sure to keep probing different types of interests.
    
Previous questions: {interaction_history_formatted}.

The following {num_features} features describe people's preferences for different kinds of articles: {features}.

Generate the most informative pairwise comparison question that, when answered, will reveal the most about the desired behavior beyond what has already been queried for above.

Make sure your question addresses different aspects of their preferences than the questions that have already been asked. At the same time however, the question should be bite-sized, and not ask for too much at once. Phrase your question in a way that is understandable to non-expert humans; do not use any jargon without explanation.

Then create two specific, real-world examples of news articles matching the description you provided. For each feature you use, make sure you match the wording of the feature verbatim to the list above. Provide your output in the format:

Would you prefer Option A: an article with [features for option A]
OR
Option B: an article with [features for option B]?

For example: [Option A title and simple, one sentence description]
OR
Option B: [Option B title and simple, one sentence description])PROMPT";

constexpr std::string_view k_extract_features = R"PROMPT(Your task is to learn {domain_description}. Enumerate {num_features} binary topics (features) that may impact user's decisions when choosing which article to read. People's interests are broad, so you should seek to understand their interests across many topics; in other words, go for breadth rather than depth.

Only include the most important features in your list. Do not include features for which the user's preference would be obvious. Order the features from the most to least likely of interest.

Your output should be in the following format:
1) <first feature>
2) <second feature>)PROMPT";

constexpr std::string_view k_verbalize_query = R"PROMPT(Create two specific, real-world examples of news articles someone might be interested in reading based on the following question which juxtaposes two different news articles:
"Would you prefer Option A: an article with {pairwise_comparison_0}
OR
Option B: {pairwise_comparison_1}?".
This question instantiates two articles based on their feature values. Features lie on a spectrum ranging from 0.0 to 1.0, where 0.0 corresponds to the absence of that feature and 1.0 indicates an extremely high presence of it.

Make sure to maintain the relative difference between the two articles when generating the descriptions.

Provide your output in the format:
Option A: [Option A title and simple, one sentence description]
OR
Option B: [Option B title and simple, one sentence description])PROMPT";

constexpr std::string_view k_lm_predict = R"PROMPT(Provide your best guess and the probability that it is correct (0.0 to 1.0) for the following question. Give ONLY the guess and probability, no other words or explanation. If you are unsure take your best guess (between Option A and Option B). For example:

Guess: <most likely guess--either Option A or Option B--as short as possible; not a complete sentence!>
Probability: <the probability between 0.0 and 1.0 that your guess is correct, without any extra commentary whatsoever; just the probability!>.

A user has a particular set of preferences over what articles they would like to read. They have specified their preferences in a conversation below:
{preferences}

The question is: Based on these preferences, which of the following two articles would the user prefer?

Option A: {test_case_0}
OR
Option B: {test_case_1})PROMPT";

// Not part of the published prompt set; written in the same style as the
// verbalization prompt so that value ranges agree.
constexpr std::string_view k_featurize_item = R"PROMPT(The following {num_features} features describe people's preferences for different kinds of articles:
{features}

Rate how strongly each feature is present in the article below. Features lie on a spectrum ranging from 0.0 to 1.0, where 0.0 corresponds to the absence of that feature and 1.0 indicates an extremely high presence of it.

Article: {item}

Give ONLY the values, no other words or explanation. Provide one value per feature, in the same order as the list above, in the format:
1) <value for the first feature>
2) <value for the second feature>)PROMPT";

}  // namespace

std::string to_string(PromptName name) {
  switch (name) {
    case PromptName::extract_features: return "extract_features";
    case PromptName::verbalize_query: return "verbalize_query";
    case PromptName::featurize_item: return "featurize_item";
    case PromptName::lm_pairwise: return "lm_pairwise";
    case PromptName::lm_pairwise_with_features: return "lm_pairwise_with_features";
    case PromptName::lm_openended: return "lm_openended";
    case PromptName::lm_predict: return "lm_predict";
  }
  return "unknown";
}

PromptName prompt_name_from_string(const std::string& text) {
  for (auto name : all_prompt_names())
    if (to_string(name) == text) return name;
  throw ValidationError("unknown prompt name: " + text);
}

const std::vector<PromptName>& all_prompt_names() {
  static const std::vector<PromptName> names = {
      PromptName::extract_features, PromptName::verbalize_query, PromptName::featurize_item,
      PromptName::lm_pairwise,      PromptName::lm_pairwise_with_features,
      PromptName::lm_openended,     PromptName::lm_predict,
  };
  return names;
}

std::string_view prompt_template(PromptName name) {
  switch (name) {
    case PromptName::extract_features: return k_extract_features;
    case PromptName::verbalize_query: return k_verbalize_query;
    case PromptName::featurize_item: return k_featurize_item;
    case PromptName::lm_pairwise: return k_lm_pairwise;
    case PromptName::lm_pairwise_with_features: return k_lm_pairwise_with_features;
    case PromptName::lm_openended: return k_lm_openended;
    case PromptName::lm_predict: return k_lm_predict;
  }
  throw ContractViolation("unknown prompt");
}

std::vector<std::string> prompt_placeholders(PromptName name) {
  const auto body = prompt_template(name);
  std::vector<std::string> names;
  for (std::size_t pos = body.find('{'); pos != std::string_view::npos; pos = body.find('{', pos + 1)) {
    const auto close = body.find('}', pos);
    if (close == std::string_view::npos) break;
    std::string placeholder(body.substr(pos + 1, close - pos - 1));
    if (std::find(names.begin(), names.end(), placeholder) == names.end()) names.push_back(placeholder);
  }
  return names;
}

std::string render_prompt(PromptName name, const std::map<std::string, std::string>& values) {
  const auto body = prompt_template(name);
  std::set<std::string> used;
  std::string out;
  out.reserve(body.size() + 256);
  std::size_t cursor = 0;
  while (cursor < body.size()) {
    const auto open = body.find('{', cursor);
    if (open == std::string_view::npos) {
      out.append(body.substr(cursor));
      break;
    }
    const auto close = body.find('}', open);
    require(close != std::string_view::npos, "unterminated placeholder in prompt template");
    out.append(body.substr(cursor, open - cursor));
    const std::string key(body.substr(open + 1, close - open - 1));
    const auto it = values.find(key);
    require(it != values.end(), "missing value for placeholder {" + key + "} in " + to_string(name));
    out.append(it->second);
    used.insert(key);
    cursor = close + 1;
  }
  for (const auto& [key, _] : values)
    require(used.count(key) > 0, "no placeholder {" + key + "} in " + to_string(name));
  return out;
}

}  // namespace openpref
