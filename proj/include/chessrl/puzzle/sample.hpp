#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chessrl/chess/movegen.hpp"
#include "chessrl/parallel/exec.hpp"
#include "chessrl/puzzle/puzzle.hpp"

namespace chessrl::puzzle {

enum class DecomposeMode { AllMoves, SolverOnly };

std::string to_string(DecomposeMode mode);
/// Accepts "all_moves"/"all-moves" and "solver_only"/"solver-only".
DecomposeMode parse_decompose_mode(const std::string& text);

/// One (state, optimal move) pair cut from a puzzle trajectory.
struct PositionSample {
  std::string puzzle_id;
  std::size_t ply_index = 0;
  chess::Position state;
  chess::Move optimal_move;
  chess::Color solver_side = chess::Color::White;
  bool is_solver_move = true;
  int rating = 0;

  /// Move history from the puzzle's initial FEN (setup move included) up to
  /// `state`. Absent for samples built without a trajectory.
  std::optional<std::string> root_fen;
  std::vector<chess::Move> history;
};

/// Splits a validated puzzle into samples. The setup move is always applied
/// first and never emitted. AllMoves yields line_length() samples;
/// SolverOnly keeps the even plies.
std::vector<PositionSample> decompose(const Puzzle& puzzle, DecomposeMode mode);

/// decompose() over many puzzles, concatenated in puzzle order.
std::vector<PositionSample> decompose_all(const std::vector<Puzzle>& puzzles, DecomposeMode mode,
                                          parallel::Exec exec = parallel::Exec::Parallel);

/// Line-delimited record for a sample. `legal_san` is included when asked.
nlohmann::ordered_json to_record(const PositionSample& sample, bool include_legal_san = false);

/// Inverse of to_record. Re-checks that the optimal move is legal in the
/// state and that optimal_san and optimal_uci agree; throws ValidationError.
PositionSample from_record(const nlohmann::json& record);

}  // namespace chessrl::puzzle
