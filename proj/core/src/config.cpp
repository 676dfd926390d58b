#include "openpref/config.hpp"

#include <fstream>
#include <sstream>

#include "openpref/errors.hpp"
#include "openpref/serialization.hpp"

namespace openpref {

void SessionConfig::validate() const {
  prior.validate();
  if (dimension < 2) throw ConfigurationError("d must be at least 2");
  if (k < 1 || k > dimension) throw ConfigurationError("need 1 <= K <= d");
  if (turn_budget < 1) throw ConfigurationError("turn budget must be positive");
  if (time_limit_seconds && !(*time_limit_seconds > 0.0)) throw ConfigurationError("time limit must be positive");
}

void to_json(nlohmann::json& j, const SessionConfig& c) {
  j = nlohmann::json{{"d", c.dimension},         {"K", c.k},
                     {"prior", c.prior},         {"update", c.update},
                     {"turn_budget", c.turn_budget}, {"exclude_asked", c.exclude_asked},
                     {"seed", c.seed}};
  j["time_limit_seconds"] = c.time_limit_seconds ? nlohmann::json(*c.time_limit_seconds) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, SessionConfig& c) {
  c = SessionConfig{};
  c.dimension = j.value("d", c.dimension);
  c.k = j.value("K", c.k);
  if (j.contains("prior")) c.prior = j.at("prior").get<PriorConfig>();
  // Flat aliases for the most common knobs.
  if (j.contains("particles")) c.prior.particles = j.at("particles").get<std::size_t>();
  if (j.contains("base_variance")) c.prior.base_variance = j.at("base_variance").get<double>();
  if (j.contains("update")) c.update = j.at("update").get<UpdateConfig>();
  c.turn_budget = j.value("turn_budget", c.turn_budget);
  if (j.contains("time_limit_seconds") && !j.at("time_limit_seconds").is_null())
    c.time_limit_seconds = j.at("time_limit_seconds").get<double>();
  c.exclude_asked = j.value("exclude_asked", c.exclude_asked);
  c.seed = j.value("seed", c.seed);
  c.validate();
}

void to_json(nlohmann::json& j, const ServiceConfig& c) {
  j = c.session;
  j["data_dir"] = c.data_dir.string();
  j["busy_policy"] = c.busy_policy == BusyPolicy::wait ? "wait" : "fail_fast";
  j["domain_description"] = c.domain_description;
  j["lm"] = {{"client", c.lm.client},
             {"synthesize", c.lm.synthesize},
             {"max_attempts", c.lm.max_attempts},
             {"endpoint", c.lm.remote.base_url},
             {"path", c.lm.remote.path},
             {"model", c.lm.remote.model},
             {"api_key_env", c.lm.remote.api_key_env},
             {"timeout_seconds", c.lm.remote.timeout_seconds},
             {"transport_attempts", c.lm.remote.transport_attempts}};
  if (c.lm.fixture_dir) j["lm"]["fixtures"] = c.lm.fixture_dir->string();
}

void from_json(const nlohmann::json& j, ServiceConfig& c) {
  c = ServiceConfig{};
  c.session = j.get<SessionConfig>();
  if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
  if (j.contains("busy_policy")) {
    const auto policy = j.at("busy_policy").get<std::string>();
    if (policy == "wait") c.busy_policy = BusyPolicy::wait;
    else if (policy == "fail_fast") c.busy_policy = BusyPolicy::fail_fast;
    else throw ConfigurationError("busy_policy must be \"wait\" or \"fail_fast\"");
  }
  c.domain_description = j.value("domain_description", c.domain_description);
  if (j.contains("lm")) {
    const auto& lm = j.at("lm");
    if (lm.contains("api_key")) throw ConfigurationError("API keys are read from the environment, not the config file");
    c.lm.client = lm.value("client", c.lm.client);
    c.lm.synthesize = lm.value("synthesize", c.lm.synthesize);
    c.lm.max_attempts = lm.value("max_attempts", c.lm.max_attempts);
    if (lm.contains("fixtures")) c.lm.fixture_dir = lm.at("fixtures").get<std::string>();
    c.lm.remote.base_url = lm.value("endpoint", c.lm.remote.base_url);
    c.lm.remote.path = lm.value("path", c.lm.remote.path);
    c.lm.remote.model = lm.value("model", c.lm.remote.model);
    c.lm.remote.api_key_env = lm.value("api_key_env", c.lm.remote.api_key_env);
    c.lm.remote.timeout_seconds = lm.value("timeout_seconds", c.lm.remote.timeout_seconds);
    c.lm.remote.transport_attempts = lm.value("transport_attempts", c.lm.remote.transport_attempts);
  }
}

ServiceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_json(ss.str()).get<ServiceConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError("invalid config file " + path.string() + ": " + e.what());
  }
}

std::shared_ptr<ChatClient> make_chat_client(const LmSettings& settings) {
  if (settings.client == "mock") return std::make_shared<MockChatClient>(settings.fixture_dir, settings.synthesize);
  if (settings.client == "remote") return std::make_shared<RemoteChatClient>(settings.remote);
  throw ConfigurationError("lm.client must be \"mock\" or \"remote\"");
}

}  // namespace openpref
