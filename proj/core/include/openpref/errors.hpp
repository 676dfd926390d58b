#pragma once

#include <stdexcept>
#include <string>

namespace openpref {

// Base of every error raised by the library. `code()` is the stable
// machine-readable identifier used by the HTTP API ({code, message}).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define OPENPREF_DEFINE_ERROR(Name, code_string)                       \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message) : Error(code_string, message) {} \
  };

OPENPREF_DEFINE_ERROR(ContractViolation, "contract_violation")
OPENPREF_DEFINE_ERROR(ParseError, "parse_error")
OPENPREF_DEFINE_ERROR(ValidationError, "validation_error")
OPENPREF_DEFINE_ERROR(ConfigurationError, "configuration_error")
OPENPREF_DEFINE_ERROR(QuerySpaceExhausted, "query_space_exhausted")
OPENPREF_DEFINE_ERROR(OrderingError, "ordering_error")
OPENPREF_DEFINE_ERROR(NotFoundError, "not_found")
OPENPREF_DEFINE_ERROR(BusyError, "busy")
OPENPREF_DEFINE_ERROR(TransportError, "transport_error")
OPENPREF_DEFINE_ERROR(PersistenceError, "persistence_error")

#undef OPENPREF_DEFINE_ERROR

// LM output that could not be parsed after the retry budget. Carries the
// last raw response for diagnosis.
class LmOutputError : public Error {
 public:
  LmOutputError(std::string code, const std::string& message, std::string raw_response)
      : Error(std::move(code), message), raw_response_(std::move(raw_response)) {}

  const std::string& raw_response() const noexcept { return raw_response_; }

 private:
  std::string raw_response_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace openpref
