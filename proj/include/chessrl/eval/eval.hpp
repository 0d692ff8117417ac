#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chessrl/eval/agent.hpp"
#include "chessrl/parallel/exec.hpp"
#include "chessrl/prompt/output_parser.hpp"

namespace chessrl::eval {

struct EvalConfig {
  prompt::PromptConfig prompt;
  prompt::ParseOptions parse;
  int bucket_width = 200;
  /// Failure transcripts kept in the report (in puzzle order).
  std::size_t max_failures = 50;
  parallel::Exec exec = parallel::Exec::Parallel;
};

struct BucketStats {
  int low = 0;
  int high = 0;  // exclusive
  std::size_t puzzles = 0;
  std::size_t solved = 0;
  std::size_t positions = 0;
  std::size_t positions_correct = 0;
};

struct FailureTranscript {
  std::string puzzle_id;
  std::size_t ply = 0;
  std::string fen;
  std::string expected_san;
  std::optional<std::string> chosen_san;
  std::string raw_output;
};

struct EvalReport {
  std::string agent;
  std::size_t puzzles = 0;
  std::size_t solved = 0;
  std::size_t positions = 0;
  std::size_t positions_correct = 0;
  double puzzle_accuracy = 0.0;
  double per_position_accuracy = 0.0;
  std::vector<BucketStats> buckets;
  std::vector<FailureTranscript> failures;

  nlohmann::ordered_json to_json() const;
  /// Human-readable table.
  std::string format_table() const;
};

/// Strict sequential protocol. For each puzzle the setup move is applied and
/// the agent is asked at every solver ply; opponent replies come from the
/// recorded line. A puzzle is solved only if every answer matches the line
/// (suffix-insensitive move equality). Later solver plies are still asked
/// after a miss, from the recorded position, so per-position accuracy is
/// tallied independently. Agent exceptions surface as AgentError naming the
/// puzzle.
EvalReport eval_puzzles(const Agent& agent, const std::vector<puzzle::Puzzle>& puzzles, const EvalConfig& cfg = {});

}  // namespace chessrl::eval
