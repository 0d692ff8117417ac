#pragma once

#include <stdexcept>
#include <string>

namespace chessrl {

/// Base for every error the library throws. `category()` is the stable,
/// machine-parseable name surfaced by the CLI and the service.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

#define CHESSRL_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

// chess-core
CHESSRL_DEFINE_ERROR(MalformedFen)
CHESSRL_DEFINE_ERROR(IllegalPosition)
CHESSRL_DEFINE_ERROR(IllegalMove)
CHESSRL_DEFINE_ERROR(AmbiguousSan)
CHESSRL_DEFINE_ERROR(UnknownSan)
CHESSRL_DEFINE_ERROR(UnknownUci)
CHESSRL_DEFINE_ERROR(MalformedPgn)

// puzzle-data
CHESSRL_DEFINE_ERROR(CsvSchemaError)
CHESSRL_DEFINE_ERROR(ValidationError)
CHESSRL_DEFINE_ERROR(IoError)

// prompting / configuration
CHESSRL_DEFINE_ERROR(ConfigError)

// critic
CHESSRL_DEFINE_ERROR(UnknownPosition)
CHESSRL_DEFINE_ERROR(EngineSpawnError)
CHESSRL_DEFINE_ERROR(EngineTimeout)
CHESSRL_DEFINE_ERROR(ProtocolError)

// grpo
CHESSRL_DEFINE_ERROR(NoLegalMoves)
CHESSRL_DEFINE_ERROR(NonFiniteGradient)

// eval / diagnostics
CHESSRL_DEFINE_ERROR(AgentError)
CHESSRL_DEFINE_ERROR(UnknownTaskId)

// service
CHESSRL_DEFINE_ERROR(BindError)
CHESSRL_DEFINE_ERROR(SchemaError)

#undef CHESSRL_DEFINE_ERROR

}  // namespace chessrl
