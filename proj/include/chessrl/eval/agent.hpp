#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "chessrl/chess/movegen.hpp"
#include "chessrl/critic/critic.hpp"
#include "chessrl/grpo/policy.hpp"
#include "chessrl/prompt/prompt.hpp"
#include "chessrl/puzzle/puzzle.hpp"

namespace chessrl::eval {

struct AgentQuery {
  std::string task_id;  // puzzle id
  std::size_t ply = 0;  // index into the line after the setup move
  const chess::Position& pos;
  const chess::MoveList& legal;
  const std::string& prompt;
};

/// Anything that turns a prompt into a raw completion. choose() may be
/// called from several threads at once.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual std::string choose(const AgentQuery& q) const = 0;
};

/// Plays the recorded line.
class OracleAgent final : public Agent {
 public:
  explicit OracleAgent(const std::vector<puzzle::Puzzle>& puzzles);
  std::string name() const override { return "oracle"; }
  std::string choose(const AgentQuery& q) const override;

 private:
  std::map<std::string, std::vector<std::string>> lines_;
};

/// Uniform over legal moves, seeded from (seed, task id, ply) so answers do
/// not depend on evaluation order.
class RandomAgent final : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "random"; }
  std::string choose(const AgentQuery& q) const override;

 private:
  std::uint64_t seed_;
};

/// Highest critic value; ties go to the earlier SAN.
class CriticGreedyAgent final : public Agent {
 public:
  explicit CriticGreedyAgent(std::shared_ptr<const critic::Backend> backend) : backend_(std::move(backend)) {}
  std::string name() const override { return "critic:" + backend_->id(); }
  std::string choose(const AgentQuery& q) const override;

 private:
  std::shared_ptr<const critic::Backend> backend_;
};

/// Greedy move of the toy GRPO policy.
class PolicyAgent final : public Agent {
 public:
  explicit PolicyAgent(grpo::Theta theta) : theta_(std::move(theta)) {}
  std::string name() const override { return "policy"; }
  std::string choose(const AgentQuery& q) const override;

 private:
  grpo::Theta theta_;
};

/// Replays stored completions keyed by "<task_id>#<ply>". Missing keys
/// raise AgentError.
class TranscriptAgent final : public Agent {
 public:
  explicit TranscriptAgent(std::map<std::string, std::string> outputs) : outputs_(std::move(outputs)) {}
  /// Line-delimited {"task_id", "ply", "raw_output"} records.
  static TranscriptAgent load(const std::string& path);
  std::string name() const override { return "transcript"; }
  std::string choose(const AgentQuery& q) const override;

  static std::string key(const std::string& task_id, std::size_t ply);

 private:
  std::map<std::string, std::string> outputs_;
};

class FunctionAgent final : public Agent {
 public:
  using Fn = std::function<std::string(const AgentQuery&)>;
  FunctionAgent(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  std::string choose(const AgentQuery& q) const override { return fn_(q); }

 private:
  std::string name_;
  Fn fn_;
};

}  // namespace chessrl::eval
