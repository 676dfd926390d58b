#pragma once

#include <memory>
#include <string>

#include "openpref/session.hpp"

namespace openpref {

/// HTTP status for an error code carried by openpref::Error.
int http_status_for(const std::string& code);

/// JSON-over-HTTP front end for a SessionService.
///
///   POST /sessions                      create
///   GET  /sessions/{id}                 state
///   GET  /sessions/{id}/question        pending question (idempotent)
///   POST /sessions/{id}/answer          {"choice": "A"} or {"text": "..."}
///   POST /sessions/{id}/predict         test cases -> predictions
///   POST /sessions/{id}/finish          end elicitation early
///   POST /sessions/{id}/test-answers    {"answers": ["A", "B", ...]}
///   POST /sessions/{id}/ranking         {"order": [3, 0, ...]}
///   GET  /sessions/{id}/transcript      full session document
///   GET  /sessions/{id}/belief          belief summary and particles
///   GET  /sessions/{id}/scores          EIG of every query
///
/// Errors are {"code": ..., "message": ...}.
class HttpApi {
 public:
  explicit HttpApi(std::shared_ptr<SessionService> service);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  /// Binds an ephemeral port on `host` and returns it.
  int bind_to_any_port(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  void listen_after_bind();
  void stop();
  bool is_running() const;
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace openpref
