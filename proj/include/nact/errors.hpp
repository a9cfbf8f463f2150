#pragma once

#include <stdexcept>
#include <string>

namespace nact {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnresolvedFieldError : Error { using Error::Error; };
struct TypeMismatchError : Error { using Error::Error; };
struct UnknownEventError : Error { using Error::Error; };
struct NameCollisionError : Error { using Error::Error; };
struct DanglingBridgeError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct MissingDomainError : Error { using Error::Error; };
struct UnresolvedTargetError : Error { using Error::Error; };
struct TypeClashError : Error { using Error::Error; };
struct OversizeError : Error { using Error::Error; };
struct SchemaViolationError : Error { using Error::Error; };
struct IncompleteTraceError : Error { using Error::Error; };
struct AttachFailureError : Error { using Error::Error; };
struct MissingScenarioError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct NetworkDetachedError : Error { using Error::Error; };

}  // namespace nact
