#pragma once

#include <nlohmann/json.hpp>

#include "openpref/errors.hpp"

#include "openpref/belief.hpp"
#include "openpref/evaluation.hpp"
#include "openpref/lm_gateway.hpp"
#include "openpref/preference_model.hpp"
#include "openpref/query_optimizer.hpp"

// Canonical JSON form of the domain types. Field names follow the type
// definitions; vectors are JSON arrays. Parsing validates invariants and
// throws ValidationError / ParseError on malformed input.
namespace openpref {

using Json = nlohmann::json;

void to_json(Json& j, const Feature& f);
void from_json(const Json& j, Feature& f);
void to_json(Json& j, const FeatureSet& fs);
void from_json(const Json& j, FeatureSet& fs);
void to_json(Json& j, const FeatureVector& v);
void from_json(const Json& j, FeatureVector& v);
void to_json(Json& j, const OptionVector& o);
void from_json(const Json& j, OptionVector& o);
void to_json(Json& j, const Persona& p);
void from_json(const Json& j, Persona& p);
void to_json(Json& j, const PairwiseQuery& q);
void from_json(const Json& j, PairwiseQuery& q);
void to_json(Json& j, const Choice& c);
void from_json(const Json& j, Choice& c);
void to_json(Json& j, const BeliefState& b);
void from_json(const Json& j, BeliefState& b);
void to_json(Json& j, const DiagonalGaussian& g);
void from_json(const Json& j, DiagonalGaussian& g);
void to_json(Json& j, const PriorConfig& c);
void from_json(const Json& j, PriorConfig& c);
void to_json(Json& j, const UpdateConfig& c);
void from_json(const Json& j, UpdateConfig& c);
void to_json(Json& j, const BeliefSummary& s);
void from_json(const Json& j, BeliefSummary& s);
void to_json(Json& j, const VerbalizedQuestion& q);
void from_json(const Json& j, VerbalizedQuestion& q);
void to_json(Json& j, const LmCallRecord& r);
void from_json(const Json& j, LmCallRecord& r);
void to_json(Json& j, const Prediction& p);
void from_json(const Json& j, Prediction& p);
void to_json(Json& j, const GuessWithProbability& g);
void to_json(Json& j, const ScoredQuery& s);

std::string to_string(ResampleMode mode);
ResampleMode resample_mode_from_string(const std::string& text);

/// Parses JSON text, converting library exceptions into ParseError.
Json parse_json(const std::string& text);

/// Parses `j` as T, converting library exceptions into ParseError.
template <typename T>
T json_as(const Json& j) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

}  // namespace openpref
