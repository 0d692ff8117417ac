#pragma once

#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "chessrl/critic/critic.hpp"

namespace chessrl::critic {

struct UciOptions {
  /// argv of the engine process; argv[0] is looked up on PATH.
  std::vector<std::string> command;
  int movetime_ms = 50;
  /// Extra time allowed on top of movetime before a query is abandoned.
  int grace_ms = 2000;
  /// Handshake (uci / isready) deadline.
  int handshake_ms = 5000;
};

/// Splits a command line on whitespace. No quoting rules.
std::vector<std::string> split_command(const std::string& cmd);

/// Evaluation reported by an engine for the side to move.
struct EngineEval {
  bool is_mate = false;
  int value = 0;  // centipawns, or signed moves to mate
};

/// Parses the score of one `info` line. Returns false when the line has no
/// exact score (no score token, or a lowerbound/upperbound).
bool parse_info_score(const std::string& line, EngineEval& out);

/// Mover-perspective centipawns from an engine score of the successor.
int mover_cp(const EngineEval& successor_eval);

/// One external engine process speaking UCI over pipes. Calls on the same
/// handle are serialized. A handle whose engine timed out or died is
/// restarted on the next query.
class UciEngineCritic final : public Backend {
 public:
  /// Spawns the engine and completes the handshake. Throws EngineSpawnError,
  /// EngineTimeout or ProtocolError.
  explicit UciEngineCritic(UciOptions opts);
  ~UciEngineCritic() override;

  UciEngineCritic(const UciEngineCritic&) = delete;
  UciEngineCritic& operator=(const UciEngineCritic&) = delete;

  std::string id() const override { return "uci"; }

  CriticScore score(const chess::Position& pos, const chess::Move& mv) const override;

  /// Raw evaluation of `pos` for its side to move.
  EngineEval evaluate(const chess::Position& pos) const;

  int restarts() const;

 private:
  struct Process;

  void start() const;
  void stop() const;

  UciOptions opts_;
  mutable std::mutex mu_;
  mutable std::unique_ptr<Process> proc_;
  mutable int restarts_ = 0;
};

/// Fixed set of engine handles shared by concurrent callers. A caller blocks
/// until a handle is free, up to `acquire_timeout`, then gets EngineTimeout.
class UciEnginePool final : public Backend {
 public:
  UciEnginePool(const UciOptions& opts, int size,
                std::chrono::milliseconds acquire_timeout = std::chrono::milliseconds(30000));

  std::string id() const override { return "uci"; }
  int size() const { return static_cast<int>(handles_.size()); }

  CriticScore score(const chess::Position& pos, const chess::Move& mv) const override;

 private:
  std::vector<std::unique_ptr<UciEngineCritic>> handles_;
  mutable std::vector<bool> busy_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::chrono::milliseconds acquire_timeout_;
};

}  // namespace chessrl::critic
