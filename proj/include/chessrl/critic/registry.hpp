#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "chessrl/critic/critic.hpp"

namespace chessrl::critic {

/// Declarative backend choice shared by the CLI, the trainer and the
/// service. The oracle is not listed here; it needs per-dataset answers.
struct BackendConfig {
  std::string kind = "heuristic";  // heuristic | uci | table
  int depth = 2;
  std::string engine_cmd;
  int movetime_ms = 50;
  int pool_size = 1;
  std::filesystem::path table_path;
};

/// Throws ConfigError for unknown kinds or missing parameters; otherwise
/// whatever the backend constructor throws.
std::shared_ptr<const Backend> make_backend(const BackendConfig& cfg);

}  // namespace chessrl::critic
