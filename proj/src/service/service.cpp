#include "chessrl/service/service.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "chessrl/chess/movegen.hpp"
#include "chessrl/chess/notation.hpp"
#include "chessrl/critic/oracle.hpp"
#include "chessrl/errors.hpp"
#include "chessrl/eval/diag.hpp"
#include "chessrl/rng.hpp"

namespace chessrl::service {
namespace {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

constexpr const char* kOracleId = "oracle";

critic::BackendConfig backend_from_json(const Json& j) {
  critic::BackendConfig b;
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") b.kind = value.get<std::string>();
    else if (key == "depth") b.depth = value.get<int>();
    else if (key == "engine_cmd") b.engine_cmd = value.get<std::string>();
    else if (key == "movetime_ms") b.movetime_ms = value.get<int>();
    else if (key == "pool_size") b.pool_size = value.get<int>();
    else if (key == "table_path") b.table_path = value.get<std::string>();
    else throw ConfigError("unknown backend key '" + key + "'");
  }
  return b;
}

OJson backend_to_json(const critic::BackendConfig& b) {
  OJson j;
  j["kind"] = b.kind;
  j["depth"] = b.depth;
  j["engine_cmd"] = b.engine_cmd;
  j["movetime_ms"] = b.movetime_ms;
  j["pool_size"] = b.pool_size;
  j["table_path"] = b.table_path.string();
  return j;
}

template <typename T>
T field(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw SchemaError(std::string("field '") + key + "' has the wrong type");
  }
}

Json parse_body(const std::string& body) {
  try {
    auto j = Json::parse(body.empty() ? std::string("{}") : body);
    if (!j.is_object()) throw SchemaError("request body must be a JSON object");
    return j;
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
}

// Parses every FEN up front; a request with any bad FEN is rejected with the
// offending rows.
std::vector<chess::Position> parse_fens(const std::vector<std::string>& fens) {
  std::vector<chess::Position> out;
  RequestError err{422, "", "", {}};
  for (std::size_t i = 0; i < fens.size(); ++i) {
    try {
      out.push_back(chess::parse_fen(fens[i]));
    } catch (const Error& e) {
      if (err.rows.empty()) {
        err.category = e.category();
        err.message = "row " + std::to_string(i) + ": " + e.what();
      }
      err.rows.push_back(i);
    }
  }
  if (!err.rows.empty()) throw err;
  return out;
}

int status_of(const std::string& category) {
  if (category == "SchemaError") return 400;
  if (category == "MalformedFen" || category == "IllegalPosition") return 422;
  if (is_backend_failure(category)) return 503;
  return 500;
}

template <typename F>
std::pair<int, OJson> guarded(F&& f) {
  try {
    return f();
  } catch (const RequestError& e) {
    return {e.status, e.to_json()};
  } catch (const Error& e) {
    return {status_of(e.category()), RequestError{status_of(e.category()), e.category(), e.what(), {}}.to_json()};
  } catch (const std::exception& e) {
    return {500, RequestError{500, "InternalError", e.what(), {}}.to_json()};
  }
}

void check_count(std::size_t count, std::size_t max_batch) {
  if (count > max_batch)
    throw SchemaError("count " + std::to_string(count) + " exceeds the maximum batch " + std::to_string(max_batch));
}

}  // namespace

std::string version() { return CHESSRL_VERSION; }

bool is_backend_failure(const std::string& category) {
  return category == "EngineSpawnError" || category == "EngineTimeout" || category == "ProtocolError";
}

std::pair<std::string, int> parse_bind(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw ConfigError("bind address must be host:port, got '" + text + "'");
  std::string host = text.substr(0, colon);
  if (host.empty()) host = "127.0.0.1";
  const std::string port_text = text.substr(colon + 1);
  char* end = nullptr;
  const long port = std::strtol(port_text.c_str(), &end, 10);
  if (port_text.empty() || *end != '\0' || port < 0 || port > 65535)
    throw ConfigError("invalid port in bind address '" + text + "'");
  return {host, static_cast<int>(port)};
}

ServiceConfig ServiceConfig::from_json(const Json& j) {
  ServiceConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "bind") std::tie(c.host, c.port) = parse_bind(value.get<std::string>());
      else if (key == "host") c.host = value.get<std::string>();
      else if (key == "port") c.port = value.get<int>();
      else if (key == "max_batch") c.max_batch = value.get<std::size_t>();
      else if (key == "default_backend") c.default_backend = value.get<std::string>();
      else if (key == "default_preset") c.default_preset = value.get<std::string>();
      else if (key == "request_timeout_ms") c.request_timeout_ms = value.get<int>();
      else if (key == "http_threads") c.http_threads = value.get<int>();
      else if (key == "exec") c.exec = parallel::parse_exec(value.get<std::string>());
      else if (key == "backends") {
        c.backends.clear();
        for (const auto& [id, b] : value.items()) c.backends[id] = backend_from_json(b);
      } else {
        throw ConfigError("unknown service config key '" + key + "'");
      }
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("service config: ") + e.what());
  }
  c.validate();
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

OJson ServiceConfig::to_json() const {
  OJson j;
  j["host"] = host;
  j["port"] = port;
  j["max_batch"] = max_batch;
  j["default_backend"] = default_backend;
  j["default_preset"] = default_preset;
  j["request_timeout_ms"] = request_timeout_ms;
  j["http_threads"] = http_threads;
  j["exec"] = parallel::to_string(exec);
  j["backends"] = OJson::object();
  for (const auto& [id, b] : backends) j["backends"][id] = backend_to_json(b);
  return j;
}

void ServiceConfig::apply_env(const std::function<const char*(const char*)>& getenv) {
  auto get = [&](const char* name) -> std::optional<std::string> {
    const char* v = getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  auto to_int = [](const std::string& name, const std::string& v) {
    char* end = nullptr;
    const long n = std::strtol(v.c_str(), &end, 10);
    if (*end != '\0' || n <= 0) throw ConfigError(name + " must be a positive integer, got '" + v + "'");
    return n;
  };
  if (auto v = get("CHESSRL_SERVE_BIND")) std::tie(host, port) = parse_bind(*v);
  if (auto v = get("CHESSRL_SERVE_BACKEND")) backends[default_backend].kind = *v;
  if (auto v = get("CHESSRL_SERVE_ENGINE")) backends[default_backend].engine_cmd = *v;
  if (auto v = get("CHESSRL_SERVE_POOL_SIZE"))
    backends[default_backend].pool_size = static_cast<int>(to_int("CHESSRL_SERVE_POOL_SIZE", *v));
  if (auto v = get("CHESSRL_SERVE_MAX_BATCH"))
    max_batch = static_cast<std::size_t>(to_int("CHESSRL_SERVE_MAX_BATCH", *v));
  validate();
}

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) throw ConfigError("port out of range");
  if (max_batch == 0) throw ConfigError("max_batch must be positive");
  if (http_threads <= 0) throw ConfigError("http_threads must be positive");
  if (request_timeout_ms <= 0) throw ConfigError("request_timeout_ms must be positive");
  if (backends.count(kOracleId)) throw ConfigError("backend id 'oracle' is reserved");
  if (default_backend != kOracleId && !backends.count(default_backend))
    throw ConfigError("default backend '" + default_backend + "' is not configured");
  reward::preset(default_preset);
}

ScoreRequest ScoreRequest::from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("request must be an object");
  for (const auto& [key, value] : j.items())
    if (key != "items" && key != "weights_preset" && key != "backend_id")
      throw SchemaError("unknown request field '" + key + "'");
  if (!j.contains("items") || !j.at("items").is_array()) throw SchemaError("'items' must be an array");
  ScoreRequest r;
  r.weights_preset = field<std::string>(j, "weights_preset", "");
  r.backend_id = field<std::string>(j, "backend_id", "");
  const auto& items = j.at("items");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    const std::string where = "items[" + std::to_string(i) + "]";
    if (!it.is_object()) throw SchemaError(where + " must be an object");
    for (const auto& [key, value] : it.items())
      if (key != "fen" && key != "optimal_san" && key != "raw_output" && key != "prompt_cfg_id")
        throw SchemaError(where + ": unknown field '" + key + "'");
    if (!it.contains("fen") || !it.at("fen").is_string()) throw SchemaError(where + ".fen must be a string");
    if (!it.contains("raw_output") || !it.at("raw_output").is_string())
      throw SchemaError(where + ".raw_output must be a string");
    ScoreItem s;
    s.fen = it.at("fen").get<std::string>();
    s.raw_output = it.at("raw_output").get<std::string>();
    if (it.contains("optimal_san") && !it.at("optimal_san").is_null()) {
      if (!it.at("optimal_san").is_string()) throw SchemaError(where + ".optimal_san must be a string");
      s.optimal_san = it.at("optimal_san").get<std::string>();
    }
    s.prompt_cfg_id = field<std::string>(it, "prompt_cfg_id", "default");
    r.items.push_back(std::move(s));
  }
  return r;
}

OJson ScoreRequest::to_json() const {
  OJson j;
  j["items"] = OJson::array();
  for (const auto& s : items) {
    OJson it;
    it["fen"] = s.fen;
    it["optimal_san"] = s.optimal_san ? OJson(*s.optimal_san) : OJson(nullptr);
    it["raw_output"] = s.raw_output;
    it["prompt_cfg_id"] = s.prompt_cfg_id;
    j["items"].push_back(it);
  }
  if (!weights_preset.empty()) j["weights_preset"] = weights_preset;
  if (!backend_id.empty()) j["backend_id"] = backend_id;
  return j;
}

OJson ScoreResponse::items_json() const {
  OJson arr = OJson::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    OJson it;
    it["index"] = i;
    if (items[i].scores) {
      it["ok"] = true;
      for (const auto& [k, v] : items[i].scores->items()) it[k] = v;
    } else {
      it["ok"] = false;
      it["error"] = {{"category", items[i].error_category}, {"message", items[i].error_message}};
    }
    arr.push_back(std::move(it));
  }
  return arr;
}

OJson ScoreResponse::to_json() const {
  OJson j;
  j["items"] = items_json();
  j["meta"] = {{"backend_id", backend_id}, {"preset", preset}, {"version", version()}, {"latency_ms", latency_ms}};
  return j;
}

OJson RequestError::to_json() const {
  OJson e;
  e["category"] = category;
  e["message"] = message;
  if (!rows.empty()) e["rows"] = rows;
  return OJson{{"error", e}};
}

RewardService::RewardService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  for (const auto& [id, b] : cfg_.backends) backends_[id] = critic::make_backend(b);
}

std::vector<std::string> RewardService::backend_ids() const {
  std::vector<std::string> ids{kOracleId};
  for (const auto& [id, b] : backends_) ids.push_back(id);
  return ids;
}

const critic::Backend* RewardService::backend(const std::string& id) const {
  const auto it = backends_.find(id);
  if (it == backends_.end()) throw SchemaError("unknown backend_id '" + id + "'");
  return it->second.get();
}

ScoreResponse RewardService::score_batch(const ScoreRequest& req) const {
  const auto t0 = std::chrono::steady_clock::now();
  if (req.items.size() > cfg_.max_batch)
    throw SchemaError("batch of " + std::to_string(req.items.size()) + " exceeds the maximum " +
                      std::to_string(cfg_.max_batch));
  ScoreResponse resp;
  resp.preset = req.weights_preset.empty() ? cfg_.default_preset : req.weights_preset;
  resp.backend_id = req.backend_id.empty() ? cfg_.default_backend : req.backend_id;
  reward::RewardPreset preset;
  try {
    preset = reward::preset(resp.preset);
  } catch (const ConfigError& e) {
    throw SchemaError(e.what());
  }
  const bool oracle = resp.backend_id == kOracleId;
  const critic::Backend* shared = oracle ? nullptr : backend(resp.backend_id);

  resp.items = parallel::map_index<ItemResult>(cfg_.exec, req.items.size(), [&](std::size_t i) {
    const auto& item = req.items[i];
    ItemResult out;
    try {
      reward::RewardTarget target{chess::parse_fen(item.fen), std::nullopt};
      if (item.optimal_san) target.optimal = chess::parse_san(target.state, *item.optimal_san);
      const auto pcfg = prompt::parse_config_id(item.prompt_cfg_id);
      std::optional<critic::OracleCritic> per_item;
      const critic::Backend* b = shared;
      if (oracle) {
        if (!item.optimal_san) throw ValidationError("the oracle backend needs optimal_san");
        per_item.emplace(std::map<std::string, std::string>{{chess::to_fen(target.state), *item.optimal_san}});
        b = &*per_item;
      }
      const auto breakdown = reward::score(target, item.raw_output, preset, pcfg, b);
      out.scores = reward::to_json(breakdown, target.state);
    } catch (const Error& e) {
      out.error_category = e.category();
      out.error_message = e.what();
    } catch (const std::exception& e) {
      out.error_category = "InternalError";
      out.error_message = e.what();
    }
    return out;
  });
  resp.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return resp;
}

std::pair<int, OJson> RewardService::handle_score(const std::string& body) const {
  return guarded([&]() -> std::pair<int, OJson> {
    const auto req = ScoreRequest::from_json(parse_body(body));
    std::vector<std::string> fens;
    for (const auto& it : req.items) fens.push_back(it.fen);
    parse_fens(fens);
    const auto resp = score_batch(req);
    RequestError unavailable{503, "", "", {}};
    for (std::size_t i = 0; i < resp.items.size(); ++i)
      if (is_backend_failure(resp.items[i].error_category)) {
        if (unavailable.rows.empty()) {
          unavailable.category = resp.items[i].error_category;
          unavailable.message = "row " + std::to_string(i) + ": " + resp.items[i].error_message;
        }
        unavailable.rows.push_back(i);
      }
    if (!unavailable.rows.empty()) throw unavailable;
    return {200, resp.to_json()};
  });
}

std::pair<int, OJson> RewardService::handle_legal(const std::string& body) const {
  return guarded([&]() -> std::pair<int, OJson> {
    const auto j = parse_body(body);
    std::vector<std::string> fens;
    if (j.contains("fen")) fens.push_back(field<std::string>(j, "fen", ""));
    if (j.contains("fens")) fens = field<std::vector<std::string>>(j, "fens", {});
    if (fens.empty()) throw SchemaError("expected 'fen' or a non-empty 'fens' array");
    check_count(fens.size(), cfg_.max_batch);
    const auto positions = parse_fens(fens);
    OJson items = OJson::array();
    for (std::size_t i = 0; i < positions.size(); ++i) {
      OJson san = OJson::array(), uci = OJson::array();
      for (const auto& nm : chess::legal_moves(positions[i])) {
        san.push_back(nm.san);
        uci.push_back(chess::uci_of(nm.move));
      }
      items.push_back({{"fen", chess::to_fen(positions[i])}, {"legal_san", san}, {"legal_uci", uci}});
    }
    return {200, OJson{{"items", items}}};
  });
}

std::pair<int, OJson> RewardService::handle_board_state(const std::string& body) const {
  return guarded([&]() -> std::pair<int, OJson> {
    const auto j = parse_body(body);
    const auto count = field<std::size_t>(j, "count", 1);
    const auto seed = field<std::uint64_t>(j, "seed", 0);
    const auto k = field<int>(j, "k", 0);
    check_count(count, cfg_.max_batch);
    if (k != 0 && (k < 1 || k > 5)) throw SchemaError("k must be in [1, 5]");
    const auto pool = parse_fens(field<std::vector<std::string>>(j, "pool_fens", {}));
    std::vector<eval::BoardStateTask> tasks;
    if (k == 0) {
      tasks = eval::gen_board_state_tasks(count, seed, pool, cfg_.exec);
    } else {
      for (std::size_t i = 0; i < count; ++i) {
        std::mt19937_64 rng(mix_seed(seed, i));
        char id[32];
        std::snprintf(id, sizeof id, "bs-%06zu", i);
        tasks.push_back(eval::gen_board_state_task(rng, k, pool, id));
      }
    }
    OJson items = OJson::array();
    for (const auto& t : tasks) items.push_back(eval::to_record(t));
    return {200, OJson{{"items", items}}};
  });
}

std::pair<int, OJson> RewardService::handle_two_candidate(const std::string& body) const {
  return guarded([&]() -> std::pair<int, OJson> {
    const auto j = parse_body(body);
    const auto count = field<std::size_t>(j, "count", 1);
    const auto seed = field<std::uint64_t>(j, "seed", 0);
    const auto margin = field<double>(j, "margin", 0.2);
    const auto id = field<std::string>(j, "backend_id", cfg_.default_backend);
    check_count(count, cfg_.max_batch);
    if (!(margin >= 0.0)) throw SchemaError("margin must be non-negative");
    if (id == kOracleId) throw SchemaError("two-candidate tasks need a value backend, not the oracle");
    const auto pool = parse_fens(field<std::vector<std::string>>(j, "pool_fens", {}));
    const auto tasks = eval::gen_two_candidate_tasks(count, seed, pool, *backend(id), margin, cfg_.exec);
    OJson items = OJson::array();
    for (const auto& t : tasks) items.push_back(eval::to_record(t));
    return {200, OJson{{"items", items}, {"requested", count}}};
  });
}

OJson RewardService::health() const {
  return OJson{{"status", "ok"}, {"version", version()}, {"backends", backend_ids()}};
}

}  // namespace chessrl::service
