#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chessrl/critic/registry.hpp"
#include "chessrl/parallel/exec.hpp"
#include "chessrl/reward/reward.hpp"

namespace chessrl::service {

/// Library version reported by /healthz and in response metadata.
std::string version();

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_batch = 512;
  /// Backends built at startup, addressable by id in requests. "oracle" is
  /// always available and grades against each item's optimal_san.
  std::map<std::string, critic::BackendConfig> backends{{"heuristic", critic::BackendConfig{}}};
  std::string default_backend = "heuristic";
  std::string default_preset = "dense";
  int request_timeout_ms = 30000;
  int http_threads = 8;
  parallel::Exec exec = parallel::Exec::Parallel;

  /// Unknown keys and invalid values raise ConfigError.
  static ServiceConfig from_json(const nlohmann::json& j);
  static ServiceConfig load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;

  /// Environment overrides: CHESSRL_SERVE_BIND (host:port),
  /// CHESSRL_SERVE_BACKEND (kind of the default backend),
  /// CHESSRL_SERVE_ENGINE (engine command), CHESSRL_SERVE_POOL_SIZE,
  /// CHESSRL_SERVE_MAX_BATCH. `getenv` is injectable for tests.
  void apply_env(const std::function<const char*(const char*)>& getenv);

  void validate() const;
};

/// "host:port" or ":port". Throws ConfigError.
std::pair<std::string, int> parse_bind(const std::string& text);

struct ScoreItem {
  std::string fen;
  std::optional<std::string> optimal_san;
  std::string raw_output;
  std::string prompt_cfg_id = "default";
};

struct ScoreRequest {
  std::vector<ScoreItem> items;
  std::string weights_preset;
  std::string backend_id;

  /// Throws SchemaError on structural violations.
  static ScoreRequest from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

struct ItemResult {
  std::optional<nlohmann::ordered_json> scores;  // reward::to_json record
  std::string error_category;
  std::string error_message;
};

struct ScoreResponse {
  std::vector<ItemResult> items;  // same order as the request
  std::string backend_id;
  std::string preset;
  double latency_ms = 0.0;

  nlohmann::ordered_json to_json() const;
  /// Item payload only, without timing metadata.
  nlohmann::ordered_json items_json() const;
};

/// Request-level failure carrying its HTTP status.
struct RequestError {
  int status = 400;
  std::string category;
  std::string message;
  std::vector<std::size_t> rows;

  nlohmann::ordered_json to_json() const;
};

/// Transport-independent core. Backends are built once in the constructor;
/// every handler is const and safe to call concurrently.
class RewardService {
 public:
  explicit RewardService(ServiceConfig cfg);

  const ServiceConfig& config() const { return cfg_; }
  std::vector<std::string> backend_ids() const;

  /// Order-preserving; per-item failures never fail the batch. Throws
  /// SchemaError for an oversize batch, unknown preset or unknown backend.
  ScoreResponse score_batch(const ScoreRequest& req) const;

  /// HTTP-shaped handlers: JSON body in, (status, JSON body) out.
  std::pair<int, nlohmann::ordered_json> handle_score(const std::string& body) const;
  std::pair<int, nlohmann::ordered_json> handle_legal(const std::string& body) const;
  std::pair<int, nlohmann::ordered_json> handle_board_state(const std::string& body) const;
  std::pair<int, nlohmann::ordered_json> handle_two_candidate(const std::string& body) const;
  nlohmann::ordered_json health() const;

 private:
  const critic::Backend* backend(const std::string& id) const;

  ServiceConfig cfg_;
  std::map<std::string, std::shared_ptr<const critic::Backend>> backends_;
};

/// Error categories that mean the critic itself is unavailable (HTTP 503).
bool is_backend_failure(const std::string& category);

/// HTTP/1.1 front end over RewardService. Every request writes one JSON
/// access-log line.
class HttpServer {
 public:
  HttpServer(const RewardService& service, std::ostream* access_log);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Throws BindError. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  /// Returns once a concurrent listen() accepts connections.
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace chessrl::service
