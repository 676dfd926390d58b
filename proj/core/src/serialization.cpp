#include "openpref/serialization.hpp"

#include "openpref/errors.hpp"

namespace openpref {

void to_json(Json& j, const Feature& f) { j = Json{{"rank", f.rank}, {"description", f.description}}; }

void from_json(const Json& j, Feature& f) {
  j.at("rank").get_to(f.rank);
  j.at("description").get_to(f.description);
}

void to_json(Json& j, const FeatureSet& fs) {
  j = Json{{"features", fs.features()}, {"dimension", fs.dimension()}};
}

void from_json(const Json& j, FeatureSet& fs) {
  fs = FeatureSet(j.at("features").get<std::vector<Feature>>());
  if (j.contains("dimension") && j.at("dimension").get<std::size_t>() != fs.dimension())
    throw ValidationError("feature set dimension does not match its feature list");
}

void to_json(Json& j, const FeatureVector& v) {
  j = Json{{"values", std::vector<double>(v.values().begin(), v.values().end())}};
}

void from_json(const Json& j, FeatureVector& v) { v = FeatureVector(j.at("values").get<std::vector<double>>()); }

void to_json(Json& j, const OptionVector& o) { j = Json{{"bits", o.bits()}, {"K", o.k()}}; }

void from_json(const Json& j, OptionVector& o) {
  o = OptionVector(j.at("bits").get<std::vector<std::uint8_t>>(), j.at("K").get<std::size_t>());
}

void to_json(Json& j, const Persona& p) { j = Json{{"weights", p.weights}}; }

void from_json(const Json& j, Persona& p) { j.at("weights").get_to(p.weights); }

void to_json(Json& j, const PairwiseQuery& q) {
  j = Json{{"option_a", q.option_a()}, {"option_b", q.option_b()}};
}

void from_json(const Json& j, PairwiseQuery& q) {
  q = PairwiseQuery(j.at("option_a").get<OptionVector>(), j.at("option_b").get<OptionVector>());
}

void to_json(Json& j, const Choice& c) { j = Json{{"value", to_string(c.value)}, {"tie_flag", c.tie_flag}}; }

void from_json(const Json& j, Choice& c) {
  if (j.is_string()) {
    c = Choice{choice_value_from_string(j.get<std::string>()), false};
    return;
  }
  c.value = choice_value_from_string(j.at("value").get<std::string>());
  c.tie_flag = j.value("tie_flag", false);
}

void to_json(Json& j, const BeliefState& b) {
  j = Json{{"personas", b.personas}, {"weights", b.weights}, {"turn", b.turn}, {"rng_seed", b.rng_seed}};
}

void from_json(const Json& j, BeliefState& b) {
  j.at("personas").get_to(b.personas);
  j.at("weights").get_to(b.weights);
  j.at("turn").get_to(b.turn);
  j.at("rng_seed").get_to(b.rng_seed);
  b.validate();
}

void to_json(Json& j, const DiagonalGaussian& g) { j = Json{{"mean", g.mean}, {"std", g.std}}; }

void from_json(const Json& j, DiagonalGaussian& g) {
  j.at("mean").get_to(g.mean);
  j.at("std").get_to(g.std);
}

std::string to_string(ResampleMode mode) {
  switch (mode) {
    case ResampleMode::gaussian_refit: return "gaussian_refit";
    case ResampleMode::systematic_then_refit: return "systematic_then_refit";
    case ResampleMode::importance_only: return "importance_only";
  }
  return "gaussian_refit";
}

ResampleMode resample_mode_from_string(const std::string& text) {
  if (text == "gaussian_refit") return ResampleMode::gaussian_refit;
  if (text == "systematic_then_refit") return ResampleMode::systematic_then_refit;
  if (text == "importance_only") return ResampleMode::importance_only;
  throw ConfigurationError("unknown resample mode: " + text);
}

void to_json(Json& j, const PriorConfig& c) {
  j = Json{{"particles", c.particles},
           {"base_variance", c.base_variance},
           {"importance_intercept", c.importance_intercept},
           {"importance_slope", c.importance_slope},
           {"weight_floor", c.weight_floor}};
}

void from_json(const Json& j, PriorConfig& c) {
  c = PriorConfig{};
  c.particles = j.value("particles", c.particles);
  c.base_variance = j.value("base_variance", c.base_variance);
  c.importance_intercept = j.value("importance_intercept", c.importance_intercept);
  c.importance_slope = j.value("importance_slope", c.importance_slope);
  c.weight_floor = j.value("weight_floor", c.weight_floor);
  c.validate();
}

void to_json(Json& j, const UpdateConfig& c) {
  j = Json{{"mode", to_string(c.mode)}, {"std_floor", c.std_floor}};
}

void from_json(const Json& j, UpdateConfig& c) {
  c = UpdateConfig{};
  if (j.contains("mode")) c.mode = resample_mode_from_string(j.at("mode").get<std::string>());
  c.std_floor = j.value("std_floor", c.std_floor);
  if (!(c.std_floor > 0.0)) throw ConfigurationError("std floor must be positive");
}

void to_json(Json& j, const BeliefSummary& s) {
  j = Json{{"mean", s.mean}, {"std", s.std}, {"effective_sample_size", s.effective_sample_size}, {"turn", s.turn}};
}

void from_json(const Json& j, BeliefSummary& s) {
  j.at("mean").get_to(s.mean);
  j.at("std").get_to(s.std);
  j.at("effective_sample_size").get_to(s.effective_sample_size);
  j.at("turn").get_to(s.turn);
}

void to_json(Json& j, const VerbalizedQuestion& q) {
  j = Json{{"question_text", q.question_text},
           {"example_a", q.example_a},
           {"example_b", q.example_b},
           {"source_query", q.source_query ? Json(*q.source_query) : Json(nullptr)},
           {"fallback_rendering", q.fallback_rendering}};
}

void from_json(const Json& j, VerbalizedQuestion& q) {
  j.at("question_text").get_to(q.question_text);
  j.at("example_a").get_to(q.example_a);
  j.at("example_b").get_to(q.example_b);
  q.source_query.reset();
  if (j.contains("source_query") && !j.at("source_query").is_null())
    q.source_query = j.at("source_query").get<PairwiseQuery>();
  q.fallback_rendering = j.value("fallback_rendering", false);
}

void to_json(Json& j, const LmCallRecord& r) {
  j = Json{{"template", r.template_name}, {"prompt", r.prompt},   {"response", r.response},
           {"latency_ms", r.latency_ms},  {"attempt", r.attempt}, {"parsed", r.parsed}};
}

void from_json(const Json& j, LmCallRecord& r) {
  j.at("template").get_to(r.template_name);
  j.at("prompt").get_to(r.prompt);
  j.at("response").get_to(r.response);
  r.latency_ms = j.value("latency_ms", 0.0);
  r.attempt = j.value("attempt", 1);
  r.parsed = j.value("parsed", false);
}

void to_json(Json& j, const Prediction& p) { j = Json{{"choice", p.choice}, {"probability_a", p.probability_a}}; }

void from_json(const Json& j, Prediction& p) {
  j.at("choice").get_to(p.choice);
  j.at("probability_a").get_to(p.probability_a);
}

void to_json(Json& j, const GuessWithProbability& g) { j = Json{{"guess", g.guess}, {"confidence", g.confidence}}; }

void to_json(Json& j, const ScoredQuery& s) {
  j = Json{{"query", s.query}, {"eig_bits", s.eig_bits}, {"predictive_p_a", s.predictive_p_a}, {"index", s.index}};
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace openpref
