#include "chessrl/chess/notation.hpp"

#include <algorithm>
#include <cctype>

#include "chessrl/errors.hpp"

namespace chessrl::chess {

namespace {

std::string check_suffix(const Position& pos, const Move& mv) {
  const Position next = pos.play_unchecked(mv);
  if (!next.in_check()) return {};
  return generate_legal(next).empty() ? "#" : "+";
}

// SAN without the check suffix. `legal` must be the legal moves of `pos`.
std::string san_body(const Position& pos, const Move& mv, const std::vector<Move>& legal) {
  const Piece piece = pos.at(mv.from);
  if (pos.is_castling(mv)) return file_of(mv.to) == 6 ? "O-O" : "O-O-O";

  std::string out;
  const bool capture = pos.is_capture(mv);
  if (piece.kind == PieceKind::Pawn) {
    if (capture) {
      out.push_back(static_cast<char>('a' + file_of(mv.from)));
      out.push_back('x');
    }
    out += square_name(mv.to);
    if (mv.promotion != PieceKind::None) {
      out.push_back('=');
      out.push_back(san_letter(mv.promotion));
    }
    return out;
  }

  out.push_back(san_letter(piece.kind));
  bool rivals = false;
  bool same_file = false;
  bool same_rank = false;
  for (const Move& other : legal) {
    if (other.to != mv.to || other.from == mv.from || pos.at(other.from).kind != piece.kind) continue;
    rivals = true;
    if (file_of(other.from) == file_of(mv.from)) same_file = true;
    if (rank_of(other.from) == rank_of(mv.from)) same_rank = true;
  }
  if (rivals) {
    if (!same_file) {
      out.push_back(static_cast<char>('a' + file_of(mv.from)));
    } else if (!same_rank) {
      out.push_back(static_cast<char>('1' + rank_of(mv.from)));
    } else {
      out += square_name(mv.from);
    }
  }
  if (capture) out.push_back('x');
  out += square_name(mv.to);
  return out;
}

std::optional<PieceKind> kind_from_letter(char c) {
  switch (c) {
    case 'N': return PieceKind::Knight;
    case 'B': return PieceKind::Bishop;
    case 'R': return PieceKind::Rook;
    case 'Q': return PieceKind::Queen;
    case 'K': return PieceKind::King;
    default: return std::nullopt;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

MoveList legal_moves(const Position& pos) {
  const auto legal = generate_legal(pos);
  MoveList out;
  out.reserve(legal.size());
  for (const Move& mv : legal) {
    out.push_back({mv, san_body(pos, mv, legal) + check_suffix(pos, mv), uci_of(mv)});
  }
  std::sort(out.begin(), out.end(), [](const NotatedMove& a, const NotatedMove& b) { return a.san < b.san; });
  return out;
}

std::string canonical_san(const Position& pos, const Move& mv) {
  const auto legal = generate_legal(pos);
  if (std::find(legal.begin(), legal.end(), mv) == legal.end())
    throw IllegalMove(uci_of(mv) + " is not legal in " + to_fen(pos));
  return san_body(pos, mv, legal) + check_suffix(pos, mv);
}

Move parse_san(const Position& pos, std::string_view text) {
  const std::string original(text);
  std::string_view s = trim(text);
  while (!s.empty() && (s.back() == '+' || s.back() == '#' || s.back() == '!' || s.back() == '?')) s.remove_suffix(1);
  if (s.empty()) throw UnknownSan("empty SAN");

  const auto legal = generate_legal(pos);

  if (s == "O-O" || s == "0-0" || s == "O-O-O" || s == "0-0-0") {
    const int file = s.size() == 3 ? 6 : 2;
    for (const Move& mv : legal)
      if (pos.is_castling(mv) && file_of(mv.to) == file) return mv;
    throw UnknownSan("castling '" + original + "' is not legal here");
  }

  PieceKind kind = PieceKind::Pawn;
  if (auto k = kind_from_letter(s.front())) {
    kind = *k;
    s.remove_prefix(1);
  }

  PieceKind promotion = PieceKind::None;
  if (kind == PieceKind::Pawn && !s.empty()) {
    if (auto k = kind_from_letter(s.back()); k && *k != PieceKind::King) {
      promotion = *k;
      s.remove_suffix(1);
      if (!s.empty() && s.back() == '=') s.remove_suffix(1);
    }
  }

  if (s.size() < 2) throw UnknownSan("cannot read '" + original + "'");
  const auto to = parse_square(s.substr(s.size() - 2));
  if (!to) throw UnknownSan("bad destination in '" + original + "'");
  s.remove_suffix(2);

  int from_file = -1;
  int from_rank = -1;
  bool capture = false;
  for (char c : s) {
    if (c >= 'a' && c <= 'h' && from_file < 0 && !capture) {
      from_file = c - 'a';
    } else if (c >= '1' && c <= '8' && from_rank < 0 && !capture) {
      from_rank = c - '1';
    } else if ((c == 'x' || c == ':') && !capture) {
      capture = true;
    } else {
      throw UnknownSan("cannot read '" + original + "'");
    }
  }

  std::optional<Move> found;
  int matches = 0;
  for (const Move& mv : legal) {
    if (mv.to != *to || mv.promotion != promotion) continue;
    if (pos.at(mv.from).kind != kind || pos.is_castling(mv)) continue;
    if (from_file >= 0 && file_of(mv.from) != from_file) continue;
    if (from_rank >= 0 && rank_of(mv.from) != from_rank) continue;
    if (capture && !pos.is_capture(mv)) continue;
    found = mv;
    ++matches;
  }
  if (matches == 0) throw UnknownSan("no legal move matches '" + original + "'");
  if (matches > 1) throw AmbiguousSan("'" + original + "' matches " + std::to_string(matches) + " legal moves");
  return *found;
}

std::string uci_of(const Move& mv) {
  std::string out = square_name(mv.from) + square_name(mv.to);
  if (mv.promotion != PieceKind::None) {
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(san_letter(mv.promotion)))));
  }
  return out;
}

Move parse_uci_move(const Position& pos, std::string_view text) {
  const std::string original(text);
  text = trim(text);
  if (text.size() != 4 && text.size() != 5) throw UnknownUci("bad UCI move '" + original + "'");
  const auto from = parse_square(text.substr(0, 2));
  const auto to = parse_square(text.substr(2, 2));
  if (!from || !to) throw UnknownUci("bad UCI squares in '" + original + "'");
  PieceKind promotion = PieceKind::None;
  if (text.size() == 5) {
    auto k = kind_from_letter(static_cast<char>(std::toupper(static_cast<unsigned char>(text[4]))));
    if (!k || *k == PieceKind::King) throw UnknownUci("bad promotion in '" + original + "'");
    promotion = *k;
  }
  const Move wanted{*from, *to, promotion};
  for (const Move& mv : generate_legal(pos))
    if (mv == wanted) return mv;
  throw UnknownUci("'" + original + "' is not legal in " + to_fen(pos));
}

std::string pgn_movetext(const Position& start, const std::vector<Move>& moves) {
  std::string out;
  Position pos = start;
  bool first = true;
  for (const Move& mv : moves) {
    const std::string san = canonical_san(pos, mv);
    if (!first) out.push_back(' ');
    if (pos.side_to_move() == Color::White) {
      out += std::to_string(pos.fullmove_number()) + ". ";
    } else if (first) {
      out += std::to_string(pos.fullmove_number()) + "... ";
    }
    out += san;
    pos = pos.play_unchecked(mv);
    first = false;
  }
  return out;
}

std::vector<Move> parse_pgn_movetext(const Position& start, std::string_view text) {
  std::vector<Move> out;
  Position pos = start;
  std::size_t i = 0;
  int depth_brace = 0;
  int depth_paren = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '{') { ++depth_brace; ++i; continue; }
    if (c == '}') { --depth_brace; ++i; continue; }
    if (depth_brace > 0) { ++i; continue; }
    if (c == '(') { ++depth_paren; ++i; continue; }
    if (c == ')') { --depth_paren; ++i; continue; }
    if (std::isspace(static_cast<unsigned char>(c)) || depth_paren > 0) { ++i; continue; }

    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != '{' && text[j] != '(') ++j;
    std::string_view token = text.substr(i, j - i);
    i = j;

    if (token == "1-0" || token == "0-1" || token == "1/2-1/2" || token == "*") break;
    if (token.front() == '$') continue;
    // Strip a leading move number: "12." "12..." "12.e4".
    std::size_t k = 0;
    while (k < token.size() && std::isdigit(static_cast<unsigned char>(token[k]))) ++k;
    if (k > 0 && k < token.size() && token[k] == '.') {
      while (k < token.size() && token[k] == '.') ++k;
      token.remove_prefix(k);
    } else if (k == token.size()) {
      throw MalformedPgn("stray number '" + std::string(token) + "'");
    }
    if (token.empty()) continue;

    try {
      const Move mv = parse_san(pos, token);
      out.push_back(mv);
      pos = pos.play_unchecked(mv);
    } catch (const Error& e) {
      throw MalformedPgn("token '" + std::string(token) + "': " + e.what());
    }
  }
  if (depth_brace != 0 || depth_paren != 0) throw MalformedPgn("unbalanced comment or variation");
  return out;
}

}  // namespace chessrl::chess
