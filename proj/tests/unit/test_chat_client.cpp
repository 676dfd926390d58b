#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <fstream>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "openpref/config.hpp"
#include "openpref/errors.hpp"
#include "openpref/serialization.hpp"

using namespace openpref;

namespace {

// Minimal chat-completions endpoint on an ephemeral port.
class FakeEndpoint {
 public:
  FakeEndpoint() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      if (fail_first > 0) {
        --fail_first;
        res.status = 503;
        return;
      }
      res.status = status;
      res.set_content(reply, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<int> hits{0};
  std::atomic<int> fail_first{0};
  int status = 200;
  std::string reply = R"({"choices":[{"message":{"role":"assistant","content":"Question: Hello?"}}]})";
  std::string last_body;
  std::string last_auth;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

RemoteClientConfig config_for(const FakeEndpoint& e, const std::string& key_env = "OPENPREF_TEST_KEY_UNSET") {
  RemoteClientConfig c;
  c.base_url = e.url();
  c.model = "test-model";
  c.api_key_env = key_env;
  c.timeout_seconds = 5;
  return c;
}

}  // namespace

TEST(RemoteChatClient, SpeaksChatCompletionWireFormat) {
  FakeEndpoint e;
  ::setenv("OPENPREF_TEST_KEY", "sk-test", 1);
  RemoteChatClient client(config_for(e, "OPENPREF_TEST_KEY"));
  const auto r = client.complete({"lm_openended", {{"user", "hi there"}}, 0.0});
  EXPECT_EQ(r.content, "Question: Hello?");
  const auto body = nlohmann::json::parse(e.last_body);
  EXPECT_EQ(body.at("model"), "test-model");
  EXPECT_EQ(body.at("temperature"), 0.0);
  EXPECT_EQ(body.at("messages"), nlohmann::json::parse(R"([{"role":"user","content":"hi there"}])"));
  EXPECT_FALSE(body.contains("template_name"));
  EXPECT_EQ(e.last_auth, "Bearer sk-test");
  ::unsetenv("OPENPREF_TEST_KEY");
}

TEST(RemoteChatClient, NoKeyMeansNoAuthorizationHeader) {
  FakeEndpoint e;
  RemoteChatClient client(config_for(e));
  client.complete({"x", {{"user", "p"}}, 0.0});
  EXPECT_EQ(e.last_auth, "");
}

TEST(RemoteChatClient, RetriesServerErrorsThenSucceeds) {
  FakeEndpoint e;
  e.fail_first = 1;
  RemoteChatClient client(config_for(e));
  EXPECT_EQ(client.complete({"x", {{"user", "p"}}, 0.0}).content, "Question: Hello?");
  EXPECT_EQ(e.hits, 2);
}

TEST(RemoteChatClient, ErrorsAreTransportErrors) {
  FakeEndpoint e;
  e.status = 401;
  RemoteChatClient client(config_for(e));
  EXPECT_THROW(client.complete({"x", {{"user", "p"}}, 0.0}), TransportError);
  EXPECT_EQ(e.hits, 1);  // client errors are not retried

  FakeEndpoint malformed;
  malformed.reply = R"({"choices":[]})";
  RemoteChatClient client2(config_for(malformed));
  EXPECT_THROW(client2.complete({"x", {{"user", "p"}}, 0.0}), TransportError);

  RemoteClientConfig nowhere;
  nowhere.base_url = "http://127.0.0.1:1";
  nowhere.timeout_seconds = 1;
  nowhere.transport_attempts = 1;
  EXPECT_THROW(RemoteChatClient(nowhere).complete({"x", {{"user", "p"}}, 0.0}), TransportError);
}

TEST(RemoteChatClient, GatewayRunsOverHttp) {
  FakeEndpoint e;
  e.reply = R"({"choices":[{"message":{"content":"Guess: Option B\nProbability: 0.7"}}]})";
  LmGateway gw(std::make_shared<RemoteChatClient>(config_for(e)));
  const auto g = gw.lm_predict({}, "one", "two");
  ASSERT_TRUE(g);
  EXPECT_EQ(g->guess, Choice::b());
}

TEST(Config, DefaultsAndOverrides) {
  fixtures::TempDir dir;
  const auto path = dir.path() / "config.json";
  std::ofstream(path) << R"({"d": 6, "K": 2, "particles": 300, "base_variance": 0.5, "turn_budget": 7,
                             "time_limit_seconds": 300, "busy_policy": "fail_fast",
                             "lm": {"client": "remote", "endpoint": "http://localhost:9", "model": "m",
                                    "transport_attempts": 3}})";
  const auto c = load_config(path);
  EXPECT_EQ(c.session.dimension, 6u);
  EXPECT_EQ(c.session.prior.particles, 300u);
  EXPECT_EQ(c.session.prior.base_variance, 0.5);
  EXPECT_EQ(c.session.turn_budget, 7u);
  EXPECT_EQ(*c.session.time_limit_seconds, 300.0);
  EXPECT_EQ(c.busy_policy, BusyPolicy::fail_fast);
  EXPECT_EQ(c.lm.client, "remote");
  EXPECT_EQ(c.lm.remote.base_url, "http://localhost:9");
  EXPECT_EQ(c.lm.remote.transport_attempts, 3);
  EXPECT_EQ(c.lm.remote.api_key_env, "OPENPREF_API_KEY");

  const auto round = nlohmann::json(c).get<ServiceConfig>();
  EXPECT_EQ(nlohmann::json(round), nlohmann::json(c));
}

TEST(Config, RejectsKeysAndBadValues) {
  fixtures::TempDir dir;
  const auto path = dir.path() / "c.json";
  std::ofstream(path) << R"({"lm": {"api_key": "sk-nope"}})";
  EXPECT_THROW(load_config(path), ConfigurationError);
  std::ofstream(path, std::ios::trunc) << R"({"K": 11})";
  EXPECT_THROW(load_config(path), ConfigurationError);
  std::ofstream(path, std::ios::trunc) << "{not json";
  EXPECT_THROW(load_config(path), Error);
  EXPECT_THROW(load_config(dir.path() / "missing.json"), ConfigurationError);
  LmSettings s;
  s.client = "carrier-pigeon";
  EXPECT_THROW(make_chat_client(s), ConfigurationError);
}
