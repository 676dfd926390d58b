#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace openpref {

enum class PromptName {
  extract_features,
  verbalize_query,
  featurize_item,
  lm_pairwise,                // pairwise question, history only
  lm_pairwise_with_features,  // pairwise question grounded in the feature list
  lm_openended,
  lm_predict,
};

std::string to_string(PromptName name);
PromptName prompt_name_from_string(const std::string& text);
const std::vector<PromptName>& all_prompt_names();

/// Template body with `{placeholder}` markers.
std::string_view prompt_template(PromptName name);

/// Placeholder names in order of first appearance.
std::vector<std::string> prompt_placeholders(PromptName name);

/// Substitutes every placeholder. Throws ContractViolation when a
/// placeholder has no value or a value names no placeholder.
std::string render_prompt(PromptName name, const std::map<std::string, std::string>& values);

/// Task sentence used by the feature-extraction prompt for news recommendation.
inline constexpr std::string_view kDefaultDomainDescription =
    "what topics a user is interested in reading online articles about";

}  // namespace openpref
