#include "chessrl/critic/registry.hpp"

#include "chessrl/critic/heuristic.hpp"
#include "chessrl/critic/oracle.hpp"
#include "chessrl/critic/uci_engine.hpp"
#include "chessrl/errors.hpp"

namespace chessrl::critic {

std::shared_ptr<const Backend> make_backend(const BackendConfig& cfg) {
  if (cfg.kind == "heuristic") {
    if (cfg.depth < 0) throw ConfigError("heuristic depth must be >= 0");
    return std::make_shared<HeuristicCritic>(cfg.depth);
  }
  if (cfg.kind == "uci") {
    if (cfg.engine_cmd.empty()) throw ConfigError("uci backend needs an engine command");
    UciOptions opts;
    opts.command = split_command(cfg.engine_cmd);
    opts.movetime_ms = cfg.movetime_ms;
    if (cfg.pool_size > 1) return std::make_shared<UciEnginePool>(opts, cfg.pool_size);
    return std::make_shared<UciEngineCritic>(opts);
  }
  if (cfg.kind == "table") {
    if (cfg.table_path.empty()) throw ConfigError("table backend needs a table path");
    return std::make_shared<TableCritic>(TableCritic::load(cfg.table_path));
  }
  if (cfg.kind == "oracle") throw ConfigError("the oracle backend is built from a dataset, not from config");
  throw ConfigError("unknown backend '" + cfg.kind + "'");
}

}  // namespace chessrl::critic
