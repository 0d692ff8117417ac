#include "chessrl/prompt/prompt.hpp"

#include <fstream>
#include <sstream>

#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"

namespace chessrl::prompt {

namespace {

#include "default_prompt.inc"

constexpr const char* kSanAnswerFormat =
    "The answer must be in SAN notation, strictly using the moving\n"
    "piece and the destination square (e.g., Nf3, Rxf2, c5).";
constexpr const char* kUciAnswerFormat =
    "The answer must be in UCI notation, strictly using the origin\n"
    "square and the destination square (e.g., g1f3, f1f2, c7c5).";

std::string pgn_history(const puzzle::PositionSample& sample) {
  if (!sample.root_fen) throw ConfigError("PGN board representation requested but the sample has no move history");
  const chess::Position root = chess::parse_fen(*sample.root_fen);
  std::string movetext = chess::pgn_movetext(root, sample.history);
  if (*sample.root_fen == chess::kStartFen) return movetext;
  // Puzzle-local history: say where it starts.
  return "[FEN \"" + *sample.root_fen + "\"]\n" + movetext;
}

std::string legal_list(const chess::Position& pos, MoveNotation notation) {
  std::string out;
  for (const auto& m : chess::legal_moves(pos)) {
    if (!out.empty()) out.push_back(' ');
    out += notation == MoveNotation::San ? m.san : m.uci;
  }
  return out;
}

}  // namespace

std::string config_id(const PromptConfig& cfg) {
  std::string id;
  switch (cfg.board) {
    case BoardRepr::Fen: id = "fen"; break;
    case BoardRepr::Pgn: id = "pgn"; break;
    case BoardRepr::FenPgn: id = "fenpgn"; break;
  }
  id += cfg.notation == MoveNotation::San ? "-san" : "-uci";
  id += cfg.include_legal_moves ? "-legal" : "-nolegal";
  return id;
}

PromptConfig parse_config_id(const std::string& id) {
  if (id.empty() || id == "default") return PromptConfig{};
  std::vector<std::string> parts;
  std::stringstream ss(id);
  std::string part;
  while (std::getline(ss, part, '-')) parts.push_back(part);
  if (parts.size() != 3) throw ConfigError("bad prompt config id '" + id + "'");
  PromptConfig cfg;
  if (parts[0] == "fen") cfg.board = BoardRepr::Fen;
  else if (parts[0] == "pgn") cfg.board = BoardRepr::Pgn;
  else if (parts[0] == "fenpgn") cfg.board = BoardRepr::FenPgn;
  else throw ConfigError("bad board representation in '" + id + "'");
  if (parts[1] == "san") cfg.notation = MoveNotation::San;
  else if (parts[1] == "uci") cfg.notation = MoveNotation::Uci;
  else throw ConfigError("bad move notation in '" + id + "'");
  if (parts[2] == "legal") cfg.include_legal_moves = true;
  else if (parts[2] == "nolegal") cfg.include_legal_moves = false;
  else throw ConfigError("bad legal-move flag in '" + id + "'");
  return cfg;
}

const PromptTemplate& PromptTemplate::builtin() {
  static const PromptTemplate tmpl(kDefaultPromptTemplate);
  return tmpl;
}

PromptTemplate PromptTemplate::from_text(std::string text) { return PromptTemplate(std::move(text)); }

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return PromptTemplate(ss.str());
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  std::string out;
  out.reserve(text_.size() + 512);
  std::size_t i = 0;
  while (i < text_.size()) {
    const std::size_t open = text_.find("{{", i);
    if (open == std::string::npos) {
      out.append(text_, i, std::string::npos);
      break;
    }
    out.append(text_, i, open - i);
    const std::size_t close = text_.find("}}", open + 2);
    if (close == std::string::npos) throw ConfigError("unterminated placeholder in prompt template");
    const std::string name = text_.substr(open + 2, close - open - 2);
    auto it = values.find(name);
    if (it == values.end()) throw ConfigError("unknown placeholder {{" + name + "}} in prompt template");
    out += it->second;
    i = close + 2;
  }
  return out;
}

std::string render_query(const puzzle::PositionSample& sample, const PromptConfig& cfg) {
  const std::string fen = chess::to_fen(sample.state);
  std::string query = "User: ";
  switch (cfg.board) {
    case BoardRepr::Fen: query += "The current FEN string is " + fen; break;
    case BoardRepr::Pgn: query += "The current PGN move history is " + pgn_history(sample); break;
    case BoardRepr::FenPgn:
      query += "The current FEN string is " + fen + " and the PGN move history is " + pgn_history(sample);
      break;
  }
  if (cfg.include_legal_moves) {
    query += " and legal moves are " + legal_list(sample.state, cfg.notation) +
             ". What is the best move to make out of the list of legal moves?";
  } else {
    query += ". What is the best move to make?";
  }
  return query;
}

std::string render_prompt(const puzzle::PositionSample& sample, const PromptConfig& cfg, const PromptTemplate& tmpl) {
  std::map<std::string, std::string> values;
  values["answer_format"] = cfg.notation == MoveNotation::San ? kSanAnswerFormat : kUciAnswerFormat;
  values["query"] = render_query(sample, cfg);
  values["fen"] = chess::to_fen(sample.state);
  values["legal_moves"] = legal_list(sample.state, cfg.notation);
  values["pgn"] = sample.root_fen ? pgn_history(sample) : std::string{};
  return tmpl.render(values);
}

std::string render_prompt(const puzzle::PositionSample& sample, const PromptConfig& cfg) {
  if (cfg.template_id != "default") throw ConfigError("unknown template id '" + cfg.template_id + "'");
  return render_prompt(sample, cfg, PromptTemplate::builtin());
}

std::string render_prompt(const chess::Position& pos, const PromptConfig& cfg) {
  puzzle::PositionSample s;
  s.state = pos;
  s.solver_side = pos.side_to_move();
  return render_prompt(s, cfg);
}

}  // namespace chessrl::prompt
