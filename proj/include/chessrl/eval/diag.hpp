#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "chessrl/chess/position.hpp"
#include "chessrl/critic/critic.hpp"
#include "chessrl/parallel/exec.hpp"

namespace chessrl::eval {

/// Board-state comprehension: play k moves from a start position and report
/// the resulting FEN.
struct BoardStateTask {
  std::string task_id;
  std::string start_fen;
  std::vector<std::string> san_moves;
  std::string expected_fen;
  std::string prompt;
};

/// Two-candidate selection: pick the better of two moves by critic value.
struct TwoCandidateTask {
  std::string task_id;
  std::string fen;
  std::string move_a;  // SAN
  std::string move_b;  // SAN
  char better = 'a';
  double value_a = 0.0;
  double value_b = 0.0;
  std::string prompt;

  const std::string& answer() const { return better == 'a' ? move_a : move_b; }
};

/// Random legal playout of [8, 30] plies from the initial position; retried
/// until the end position is non-terminal.
chess::Position random_midgame(std::mt19937_64& rng);

/// Plays k random legal moves from a pool position (or a random midgame
/// when the pool is empty). Draws are retried while a playout hits a
/// terminal position before the k-th move. Throws ValidationError unless
/// 1 <= k <= 5.
BoardStateTask gen_board_state_task(std::mt19937_64& rng, int k, const std::vector<chess::Position>& pool,
                                    std::string task_id = "bs-000000");

/// count tasks with ids "bs-NNNNNN"; task i uses seed mix_seed(seed, i) and
/// k drawn uniformly from [1, 5].
std::vector<BoardStateTask> gen_board_state_tasks(std::size_t count, std::uint64_t seed,
                                                  const std::vector<chess::Position>& pool,
                                                  parallel::Exec exec = parallel::Exec::Parallel);

/// Replays san_moves from start_fen and compares with expected_fen.
bool verify(const BoardStateTask& task);

/// Builds a task from an explicit pair when the value gap is at least
/// margin; the better move is recorded by critic value and the listing
/// order is drawn from rng.
std::optional<TwoCandidateTask> make_two_candidate_task(std::mt19937_64& rng, const chess::Position& pos,
                                                        const chess::Move& first, const chess::Move& second,
                                                        const critic::Backend& backend, double margin);

/// Pairs the critic-best move (ties broken by SAN order) with a uniformly
/// drawn move at least margin worse. Returns nullopt when the position has
/// fewer than two legal moves or no move meets the margin.
std::optional<TwoCandidateTask> gen_two_candidate_task(std::mt19937_64& rng, const chess::Position& pos,
                                                       const critic::Backend& backend, double margin = 0.2);

/// Attempts `count` draws over the pool (random midgames when empty); item i
/// uses seed mix_seed(seed, i) and id "tc-NNNNNN". Skipped draws leave gaps
/// in the id sequence.
std::vector<TwoCandidateTask> gen_two_candidate_tasks(std::size_t count, std::uint64_t seed,
                                                      const std::vector<chess::Position>& pool,
                                                      const critic::Backend& backend, double margin = 0.2,
                                                      parallel::Exec exec = parallel::Exec::Parallel);

/// Text inside the last <answer>...</answer> pair, else the trimmed output.
std::string answer_span(const std::string& raw_output);
/// Collapses whitespace runs to one space and trims.
std::string normalize_fen_text(const std::string& text);

/// Strict six-field FEN comparison after whitespace normalization.
bool grade_board_state(const BoardStateTask& task, const std::string& raw_output);
/// Accepts the letter A/B or either candidate in SAN (suffix-insensitive).
bool grade_two_candidate(const TwoCandidateTask& task, const std::string& raw_output);

nlohmann::ordered_json to_record(const BoardStateTask& task);
nlohmann::ordered_json to_record(const TwoCandidateTask& task);

/// Answer keys for offline grading, keyed by task id. Records carry a
/// "kind" of "board-state" or "two-candidate".
struct TaskSet {
  std::vector<BoardStateTask> board_state;
  std::vector<TwoCandidateTask> two_candidate;

  /// Throws IoError or ValidationError.
  static TaskSet load(const std::filesystem::path& path);
  void write(std::ostream& out) const;
};

struct TaskScore {
  std::size_t items = 0;
  std::size_t correct = 0;
  double accuracy() const { return items == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(items); }
};

/// Board-state and two-candidate accuracy columns.
struct DiagReport {
  TaskScore board_state;
  TaskScore two_candidate;

  nlohmann::ordered_json to_json() const;
  std::string format_table() const;
};

struct Transcript {
  std::string task_id;
  std::string raw_output;
};

/// Reads {task_id, raw_output} lines. Throws IoError or ValidationError.
std::vector<Transcript> read_transcripts(const std::filesystem::path& path);

/// Grades each transcript against its key. Throws UnknownTaskId.
DiagReport grade_transcripts(const TaskSet& keys, const std::vector<Transcript>& transcripts);
DiagReport grade_transcripts(const std::filesystem::path& transcripts, const std::filesystem::path& keys);

}  // namespace chessrl::eval
