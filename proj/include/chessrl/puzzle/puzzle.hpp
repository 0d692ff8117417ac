#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chessrl/chess/movegen.hpp"
#include "chessrl/parallel/exec.hpp"

namespace chessrl::puzzle {

/// Column layout of the public Lichess puzzle dump.
inline constexpr const char* kLichessHeader =
    "PuzzleId,FEN,Moves,Rating,RatingDeviation,Popularity,NbPlays,Themes,GameUrl,OpeningTags";

/// One row of the puzzle database. `moves` are UCI strings; moves[0] is the
/// opponent's move that sets up the tactic, the solver answers moves[1].
struct Puzzle {
  std::string id;
  std::string initial_fen;
  std::vector<std::string> moves;
  int rating = 0;
  int rating_deviation = 0;
  int popularity = 0;
  int nb_plays = 0;
  std::vector<std::string> themes;
  std::string game_url;
  std::string opening_tags;

  /// Number of moves after the setup move (T in the decomposition).
  std::size_t line_length() const { return moves.empty() ? 0 : moves.size() - 1; }
};

struct RowError {
  std::size_t row = 0;  // 1-based data row, header excluded
  std::string puzzle_id;
  std::string category;
  std::string message;
};

struct RatingFilter {
  int min = 200;
  int max = 2800;
  bool contains(int rating) const { return rating >= min && rating <= max; }
};

struct IngestOptions {
  std::optional<RatingFilter> rating_filter;
  parallel::Exec exec = parallel::Exec::Parallel;
};

struct IngestResult {
  std::vector<Puzzle> puzzles;
  std::vector<RowError> errors;
  std::size_t rows = 0;
  std::size_t filtered_out = 0;
};

/// Splits one CSV record (RFC 4180 quoting).
std::vector<std::string> split_csv_record(const std::string& line);

/// Parses the columns of one data row; does not replay the moves.
/// Throws ValidationError on a bad column count or non-numeric fields.
Puzzle parse_row(const std::string& line);

/// Replays the solution line from initial_fen. Throws ValidationError.
void validate(const Puzzle& puzzle);

/// Streaming reader: yields validated puzzles one at a time and collects
/// per-row errors. Throws CsvSchemaError on construction if the header is
/// not the Lichess header.
class PuzzleCsvReader {
 public:
  explicit PuzzleCsvReader(std::istream& in, std::optional<RatingFilter> filter = std::nullopt);

  std::optional<Puzzle> next();

  const std::vector<RowError>& errors() const { return errors_; }
  std::size_t rows_read() const { return rows_; }
  std::size_t filtered_out() const { return filtered_; }

 private:
  std::istream& in_;
  std::optional<RatingFilter> filter_;
  std::vector<RowError> errors_;
  std::size_t rows_ = 0;
  std::size_t filtered_ = 0;
};

/// Reads the whole file; row validation runs as a data-parallel kernel.
/// Rows outside the rating filter are counted in filtered_out, not errors.
IngestResult ingest_csv(std::istream& in, const IngestOptions& options = {});
IngestResult ingest_csv(const std::filesystem::path& path, const IngestOptions& options = {});

/// Writes puzzles back in the Lichess schema.
void write_csv(std::ostream& out, const std::vector<Puzzle>& puzzles);

}  // namespace chessrl::puzzle
