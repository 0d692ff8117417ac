#include "chessrl/puzzle/puzzle.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"

namespace chessrl::puzzle {

namespace {

std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

int to_int(const std::string& field, const char* name) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ValidationError(std::string("non-numeric ") + name + " '" + field + "'");
  return v;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

void check_header(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw CsvSchemaError("empty input: missing header");
  strip_cr(header);
  if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header.erase(0, 3);
  if (header != kLichessHeader) throw CsvSchemaError("header mismatch: expected '" + std::string(kLichessHeader) + "'");
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

std::vector<std::string> split_csv_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

Puzzle parse_row(const std::string& line) {
  const auto f = split_csv_record(line);
  if (f.size() != 10) throw ValidationError("expected 10 columns, got " + std::to_string(f.size()));
  Puzzle p;
  p.id = f[0];
  p.initial_fen = f[1];
  p.moves = split_spaces(f[2]);
  p.rating = to_int(f[3], "Rating");
  p.rating_deviation = to_int(f[4], "RatingDeviation");
  p.popularity = to_int(f[5], "Popularity");
  p.nb_plays = to_int(f[6], "NbPlays");
  p.themes = split_spaces(f[7]);
  p.game_url = f[8];
  p.opening_tags = f[9];
  return p;
}

void validate(const Puzzle& puzzle) {
  if (puzzle.id.empty()) throw ValidationError("empty PuzzleId");
  if (puzzle.moves.size() < 2) throw ValidationError("solution line needs at least 2 moves");
  chess::Position pos;
  try {
    pos = chess::parse_fen(puzzle.initial_fen);
  } catch (const Error& e) {
    throw ValidationError(std::string("bad FEN: ") + e.what());
  }
  for (std::size_t i = 0; i < puzzle.moves.size(); ++i) {
    try {
      pos = pos.play_unchecked(chess::parse_uci_move(pos, puzzle.moves[i]));
    } catch (const Error&) {
      throw ValidationError("illegal move '" + puzzle.moves[i] + "' at index " + std::to_string(i));
    }
  }
}

PuzzleCsvReader::PuzzleCsvReader(std::istream& in, std::optional<RatingFilter> filter)
    : in_(in), filter_(filter) {
  check_header(in_);
}

std::optional<Puzzle> PuzzleCsvReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    ++rows_;
    Puzzle p;
    try {
      p = parse_row(line);
      if (filter_ && !filter_->contains(p.rating)) {
        ++filtered_;
        continue;
      }
      validate(p);
      return p;
    } catch (const Error& e) {
      errors_.push_back({rows_, p.id.empty() ? split_csv_record(line).front() : p.id, e.category(), e.what()});
    }
  }
  return std::nullopt;
}

IngestResult ingest_csv(std::istream& in, const IngestOptions& options) {
  check_header(in);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (!line.empty()) lines.push_back(std::move(line));
  }

  struct RowOutcome {
    std::optional<Puzzle> puzzle;
    std::optional<RowError> error;
    bool filtered = false;
  };
  const auto outcomes = parallel::map_index<RowOutcome>(options.exec, lines.size(), [&](std::size_t i) {
    RowOutcome out;
    Puzzle p;
    try {
      p = parse_row(lines[i]);
      if (options.rating_filter && !options.rating_filter->contains(p.rating)) {
        out.filtered = true;
        return out;
      }
      validate(p);
      out.puzzle = std::move(p);
    } catch (const Error& e) {
      out.error = RowError{i + 1, p.id.empty() ? split_csv_record(lines[i]).front() : p.id, e.category(), e.what()};
    }
    return out;
  });

  IngestResult result;
  result.rows = lines.size();
  for (const auto& o : outcomes) {
    if (o.puzzle) result.puzzles.push_back(*o.puzzle);
    if (o.error) result.errors.push_back(*o.error);
    if (o.filtered) ++result.filtered_out;
  }
  return result;
}

IngestResult ingest_csv(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return ingest_csv(in, options);
}

void write_csv(std::ostream& out, const std::vector<Puzzle>& puzzles) {
  out << kLichessHeader << '\n';
  for (const auto& p : puzzles) {
    out << csv_field(p.id) << ',' << csv_field(p.initial_fen) << ',' << join(p.moves, ' ') << ',' << p.rating << ','
        << p.rating_deviation << ',' << p.popularity << ',' << p.nb_plays << ',' << csv_field(join(p.themes, ' '))
        << ',' << csv_field(p.game_url) << ',' << csv_field(p.opening_tags) << '\n';
  }
}

}  // namespace chessrl::puzzle
