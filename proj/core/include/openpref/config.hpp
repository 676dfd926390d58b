#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "openpref/belief.hpp"
#include "openpref/chat_client.hpp"

namespace openpref {

/// Per-session knobs; snapshotted into every session document.
struct SessionConfig {
  std::size_t dimension = 10;
  std::size_t k = 2;
  PriorConfig prior;
  UpdateConfig update;
  std::size_t turn_budget = 20;
  std::optional<double> time_limit_seconds;  // wall-clock cap for live studies
  bool exclude_asked = true;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class BusyPolicy { wait, fail_fast };

struct LmSettings {
  std::string client = "mock";  // "mock" | "remote"
  std::optional<std::filesystem::path> fixture_dir;
  bool synthesize = true;  // mock only: fall back to generated responses
  RemoteClientConfig remote;
  int max_attempts = 2;
};

struct ServiceConfig {
  SessionConfig session;
  LmSettings lm;
  std::filesystem::path data_dir = "openpref-data";
  BusyPolicy busy_policy = BusyPolicy::wait;
  std::string domain_description;  // empty: news-article default
};

void to_json(nlohmann::json& j, const SessionConfig& c);
void from_json(const nlohmann::json& j, SessionConfig& c);
void to_json(nlohmann::json& j, const ServiceConfig& c);
void from_json(const nlohmann::json& j, ServiceConfig& c);

/// Reads a JSON configuration document. Keys absent from the file keep
/// their defaults. API keys are never read from the file.
ServiceConfig load_config(const std::filesystem::path& path);

std::shared_ptr<ChatClient> make_chat_client(const LmSettings& settings);

}  // namespace openpref
