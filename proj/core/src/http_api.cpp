#include "openpref/http_api.hpp"

#include <httplib.h>

#include <functional>

#include "openpref/errors.hpp"
#include "openpref/serialization.hpp"

namespace openpref {

namespace {

using Json = nlohmann::json;

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, Json{{"code", code}, {"message", message}});
}

Json request_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  return parse_json(req.body);
}

std::vector<Choice> parse_answers(const Json& body) {
  const Json& list = body.is_object() ? body.at("answers") : body;
  if (!list.is_array()) throw ValidationError("answers must be an array");
  std::vector<Choice> out;
  for (const auto& a : list) out.push_back(a.get<Choice>());
  return out;
}

}  // namespace

int http_status_for(const std::string& code) {
  if (code == "not_found") return 404;
  if (code == "validation_error" || code == "parse_error" || code == "configuration_error" ||
      code == "contract_violation")
    return 400;
  if (code == "ordering_error" || code == "query_space_exhausted") return 409;
  if (code == "busy") return 429;
  // Upstream LM failures: transport and unparseable output.
  if (code == "transport_error" || code == "extraction_error" || code == "verbalization_error" ||
      code == "featurization_error" || code == "baseline_strategy_error")
    return 502;
  return 500;
}

struct HttpApi::Impl {
  std::shared_ptr<SessionService> service;
  httplib::Server server;

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Maps library exceptions onto {code, message} bodies.
  Handler guarded(Handler inner) {
    return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
      try {
        inner(req, res);
      } catch (const Error& e) {
        send_error(res, http_status_for(e.code()), e.code(), e.what());
      } catch (const nlohmann::json::exception& e) {
        send_error(res, 400, "validation_error", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal_error", e.what());
      }
    };
  }

  void routes() {
    server.Post("/sessions", guarded([this](const auto& req, auto& res) {
      const Json body = request_body(req);
      const auto strategy = session_strategy_from_string(body.value("strategy", std::string("eig")));
      std::optional<SessionConfig> config;
      if (body.contains("config")) {
        Json merged = service->config().session;
        merged.merge_patch(body.at("config"));
        config = merged.get<SessionConfig>();
      }
      std::optional<FeatureSet> features;
      if (body.contains("features")) features = body.at("features").get<FeatureSet>();
      const auto s = service->create_session(body.value("domain_description", std::string()), strategy, config,
                                             std::move(features));
      send_json(res, 201, service->state(s.id));
    }));
    server.Get(R"(/sessions/([A-Za-z0-9_-]+))", guarded([this](const auto& req, auto& res) {
      send_json(res, 200, service->state(req.matches[1]));
    }));
    server.Get(R"(/sessions/([A-Za-z0-9_-]+)/question)", guarded([this](const auto& req, auto& res) {
      send_json(res, 200, service->next_question(req.matches[1]));
    }));
    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/answer)", guarded([this](const auto& req, auto& res) {
      const Json body = request_body(req);
      UserResponse response;
      if (body.contains("choice")) {
        response = body.at("choice").get<Choice>();
      } else if (body.contains("text") && body.at("text").is_string()) {
        response = body.at("text").get<std::string>();
      } else {
        throw ValidationError("answer needs \"choice\" or \"text\"");
      }
      const std::string id = req.matches[1];
      const auto summary = service->submit_answer(id, response);
      const auto s = service->snapshot(id);
      send_json(res, 200, {{"phase", to_string(s.phase)}, {"belief", summary_json(summary, s.features)}});
    }));
    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/predict)", guarded([this](const auto& req, auto& res) {
      auto tests = parse_test_cases(request_body(req));
      const auto records = service->predict_testcases(req.matches[1], std::move(tests));
      Json list = Json::array();
      for (const auto& r : records) {
        Json row{{"item_a", r.item_a}, {"item_b", r.item_b}};
        if (r.prediction) {
          row["prediction"] = *r.prediction;
        } else {
          row["prediction"] = nullptr;
        }
        if (r.lm_confidence) row["lm_confidence"] = *r.lm_confidence;
        if (r.error) row["error"] = *r.error;
        list.push_back(std::move(row));
      }
      send_json(res, 200, {{"predictions", list}});
    }));
    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/finish)", guarded([this](const auto& req, auto& res) {
      service->finish_elicitation(req.matches[1]);
      send_json(res, 200, service->state(req.matches[1]));
    }));
    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/test-answers)", guarded([this](const auto& req, auto& res) {
      send_json(res, 200, service->record_test_answers(req.matches[1], parse_answers(request_body(req))));
    }));
    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/ranking)", guarded([this](const auto& req, auto& res) {
      const Json body = request_body(req);
      const Json& order = body.is_object() ? body.at("order") : body;
      service->record_feature_ranking(req.matches[1], order.get<std::vector<int>>());
      send_json(res, 200, service->state(req.matches[1]));
    }));
    server.Get(R"(/sessions/([A-Za-z0-9_-]+)/transcript)", guarded([this](const auto& req, auto& res) {
      send_json(res, 200, service->export_transcript(req.matches[1]));
    }));
    server.Get(R"(/sessions/([A-Za-z0-9_-]+)/belief)", guarded([this](const auto& req, auto& res) {
      send_json(res, 200, service->belief(req.matches[1]));
    }));
    server.Get(R"(/sessions/([A-Za-z0-9_-]+)/scores)", guarded([this](const auto& req, auto& res) {
      send_json(res, 200, service->query_scores(req.matches[1]));
    }));
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) send_error(res, res.status, res.status == 404 ? "not_found" : "http_error", "no such route");
    });
    // The UI may be served from a different origin during development.
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
  }
};

HttpApi::HttpApi(std::shared_ptr<SessionService> service) : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  impl_->routes();
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpApi::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }

void HttpApi::listen_after_bind() { impl_->server.listen_after_bind(); }

void HttpApi::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

bool HttpApi::is_running() const { return impl_->server.is_running(); }

void HttpApi::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace openpref
