#include "chessrl/chess/position.hpp"

#include <charconv>
#include <sstream>
#include <vector>

#include "chessrl/errors.hpp"

namespace chessrl::chess {

namespace {

constexpr int kKnightSteps[8][2] = {{1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}};
constexpr int kKingSteps[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
constexpr int kRookDirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
constexpr int kBishopDirs[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};

constexpr bool on_board(int file, int rank) { return file >= 0 && file < 8 && rank >= 0 && rank < 8; }

std::vector<std::string_view> split_ws(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < text.size() && !(text[j] == ' ' || text[j] == '\t' || text[j] == '\n' || text[j] == '\r')) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<Piece> piece_from_char(char c) {
  Color color = (c >= 'a' && c <= 'z') ? Color::Black : Color::White;
  switch (c) {
    case 'p': case 'P': return Piece{color, PieceKind::Pawn};
    case 'n': case 'N': return Piece{color, PieceKind::Knight};
    case 'b': case 'B': return Piece{color, PieceKind::Bishop};
    case 'r': case 'R': return Piece{color, PieceKind::Rook};
    case 'q': case 'Q': return Piece{color, PieceKind::Queen};
    case 'k': case 'K': return Piece{color, PieceKind::King};
    default: return std::nullopt;
  }
}

}  // namespace

std::string square_name(Square sq) {
  return {static_cast<char>('a' + file_of(sq)), static_cast<char>('1' + rank_of(sq))};
}

std::optional<Square> parse_square(std::string_view text) {
  if (text.size() != 2) return std::nullopt;
  if (text[0] < 'a' || text[0] > 'h' || text[1] < '1' || text[1] > '8') return std::nullopt;
  return make_square(text[0] - 'a', text[1] - '1');
}

char san_letter(PieceKind kind) {
  switch (kind) {
    case PieceKind::Knight: return 'N';
    case PieceKind::Bishop: return 'B';
    case PieceKind::Rook: return 'R';
    case PieceKind::Queen: return 'Q';
    case PieceKind::King: return 'K';
    default: return '\0';
  }
}

char fen_char(Piece piece) {
  char c = '?';
  switch (piece.kind) {
    case PieceKind::Pawn: c = 'P'; break;
    case PieceKind::Knight: c = 'N'; break;
    case PieceKind::Bishop: c = 'B'; break;
    case PieceKind::Rook: c = 'R'; break;
    case PieceKind::Queen: c = 'Q'; break;
    case PieceKind::King: c = 'K'; break;
    case PieceKind::None: return '.';
  }
  return piece.color == Color::White ? c : static_cast<char>(c - 'A' + 'a');
}

Position::Position() : Position(parse_fen(kStartFen)) {}

Position::Position(Empty) {}

void Position::put(Square sq, Piece p) {
  board_[sq] = p;
  if (p.kind == PieceKind::King) kings_[static_cast<int>(p.color)] = sq;
}

bool Position::is_attacked(Square sq, Color by) const {
  const int f = file_of(sq);
  const int r = rank_of(sq);
  auto holds = [&](int file, int rank, PieceKind kind) {
    if (!on_board(file, rank)) return false;
    const Piece p = board_[make_square(file, rank)];
    return p.kind == kind && p.color == by;
  };

  const int pawn_rank = by == Color::White ? r - 1 : r + 1;
  if (holds(f - 1, pawn_rank, PieceKind::Pawn) || holds(f + 1, pawn_rank, PieceKind::Pawn)) return true;

  for (const auto& s : kKnightSteps)
    if (holds(f + s[0], r + s[1], PieceKind::Knight)) return true;
  for (const auto& s : kKingSteps)
    if (holds(f + s[0], r + s[1], PieceKind::King)) return true;

  auto ray_hits = [&](const int (&dirs)[4][2], PieceKind slider) {
    for (const auto& d : dirs) {
      int ff = f + d[0];
      int rr = r + d[1];
      while (on_board(ff, rr)) {
        const Piece p = board_[make_square(ff, rr)];
        if (!p.empty()) {
          if (p.color == by && (p.kind == slider || p.kind == PieceKind::Queen)) return true;
          break;
        }
        ff += d[0];
        rr += d[1];
      }
    }
    return false;
  };
  return ray_hits(kRookDirs, PieceKind::Rook) || ray_hits(kBishopDirs, PieceKind::Bishop);
}

bool Position::is_capture(const Move& mv) const {
  if (!board_[mv.to].empty()) return true;
  return board_[mv.from].kind == PieceKind::Pawn && ep_ && *ep_ == mv.to;
}

bool Position::is_castling(const Move& mv) const {
  if (board_[mv.from].kind != PieceKind::King) return false;
  const int df = file_of(mv.to) - file_of(mv.from);
  return df == 2 || df == -2;
}

Position Position::play_unchecked(const Move& mv) const {
  Position next = *this;
  const Piece mover = board_[mv.from];
  const bool capture = is_capture(mv);

  next.ep_.reset();
  next.halfmove_ = (mover.kind == PieceKind::Pawn || capture) ? 0 : halfmove_ + 1;

  if (mover.kind == PieceKind::Pawn && ep_ && *ep_ == mv.to && board_[mv.to].empty()) {
    next.board_[make_square(file_of(mv.to), rank_of(mv.from))] = Piece{};
  }

  if (is_castling(mv)) {
    const int rank = rank_of(mv.from);
    const bool kingside = file_of(mv.to) > file_of(mv.from);
    const Square rook_from = make_square(kingside ? 7 : 0, rank);
    const Square rook_to = make_square(kingside ? 5 : 3, rank);
    next.board_[rook_to] = next.board_[rook_from];
    next.board_[rook_from] = Piece{};
  }

  next.board_[mv.from] = Piece{};
  Piece placed = mover;
  if (mv.promotion != PieceKind::None) placed.kind = mv.promotion;
  next.put(mv.to, placed);

  if (mover.kind == PieceKind::Pawn) {
    const int dr = rank_of(mv.to) - rank_of(mv.from);
    if (dr == 2 || dr == -2) next.ep_ = make_square(file_of(mv.from), (rank_of(mv.from) + rank_of(mv.to)) / 2);
  }

  if (mover.kind == PieceKind::King) {
    next.castling_ &= mover.color == Color::White ? ~(kWhiteKingside | kWhiteQueenside)
                                                  : ~(kBlackKingside | kBlackQueenside);
  }
  auto clear_corner = [&](Square sq) {
    if (sq == make_square(0, 0)) next.castling_ &= ~kWhiteQueenside;
    if (sq == make_square(7, 0)) next.castling_ &= ~kWhiteKingside;
    if (sq == make_square(0, 7)) next.castling_ &= ~kBlackQueenside;
    if (sq == make_square(7, 7)) next.castling_ &= ~kBlackKingside;
  };
  clear_corner(mv.from);
  clear_corner(mv.to);

  if (side_ == Color::Black) ++next.fullmove_;
  next.side_ = opposite(side_);
  return next;
}

void Position::validate() const {
  int kings[2] = {0, 0};
  for (Square sq = 0; sq < 64; ++sq) {
    const Piece p = board_[sq];
    if (p.kind == PieceKind::King) ++kings[static_cast<int>(p.color)];
    if (p.kind == PieceKind::Pawn && (rank_of(sq) == 0 || rank_of(sq) == 7))
      throw IllegalPosition("pawn on back rank at " + square_name(sq));
  }
  if (kings[0] != 1 || kings[1] != 1) throw IllegalPosition("each side needs exactly one king");

  auto has = [&](int file, int rank, Color c, PieceKind k) {
    const Piece p = board_[make_square(file, rank)];
    return p.color == c && p.kind == k;
  };
  if ((castling_ & kWhiteKingside) && !(has(4, 0, Color::White, PieceKind::King) && has(7, 0, Color::White, PieceKind::Rook)))
    throw IllegalPosition("castling right K without king e1 and rook h1");
  if ((castling_ & kWhiteQueenside) && !(has(4, 0, Color::White, PieceKind::King) && has(0, 0, Color::White, PieceKind::Rook)))
    throw IllegalPosition("castling right Q without king e1 and rook a1");
  if ((castling_ & kBlackKingside) && !(has(4, 7, Color::Black, PieceKind::King) && has(7, 7, Color::Black, PieceKind::Rook)))
    throw IllegalPosition("castling right k without king e8 and rook h8");
  if ((castling_ & kBlackQueenside) && !(has(4, 7, Color::Black, PieceKind::King) && has(0, 7, Color::Black, PieceKind::Rook)))
    throw IllegalPosition("castling right q without king e8 and rook a8");

  if (ep_) {
    // The pawn that just double-pushed sits one rank beyond the ep square.
    const Color pusher = opposite(side_);
    const int pawn_rank = pusher == Color::White ? 3 : 4;
    if (!has(file_of(*ep_), pawn_rank, pusher, PieceKind::Pawn) || !board_[*ep_].empty())
      throw IllegalPosition("en-passant square " + square_name(*ep_) + " without a double-pushed pawn");
  }

  if (is_attacked(king_square(opposite(side_)), side_))
    throw IllegalPosition("side not to move is in check");
}

Position parse_fen(std::string_view text) {
  const auto fields = split_ws(text);
  if (fields.size() != 6) throw MalformedFen("expected 6 fields, got " + std::to_string(fields.size()));

  Position pos{Position::Empty{}};

  int rank = 7;
  int file = 0;
  for (char c : fields[0]) {
    if (c == '/') {
      if (file != 8) throw MalformedFen("rank " + std::to_string(rank + 1) + " does not have 8 squares");
      if (--rank < 0) throw MalformedFen("too many ranks");
      file = 0;
    } else if (c >= '1' && c <= '8') {
      file += c - '0';
      if (file > 8) throw MalformedFen("rank " + std::to_string(rank + 1) + " overflows");
    } else if (auto piece = piece_from_char(c)) {
      if (file >= 8) throw MalformedFen("rank " + std::to_string(rank + 1) + " overflows");
      pos.put(make_square(file, rank), *piece);
      ++file;
    } else {
      throw MalformedFen(std::string("bad placement character '") + c + "'");
    }
  }
  if (rank != 0 || file != 8) throw MalformedFen("placement must have 8 ranks of 8 squares");

  if (fields[1] == "w") {
    pos.side_ = Color::White;
  } else if (fields[1] == "b") {
    pos.side_ = Color::Black;
  } else {
    throw MalformedFen("side to move must be 'w' or 'b'");
  }

  if (fields[2] != "-") {
    for (char c : fields[2]) {
      std::uint8_t bit = 0;
      switch (c) {
        case 'K': bit = kWhiteKingside; break;
        case 'Q': bit = kWhiteQueenside; break;
        case 'k': bit = kBlackKingside; break;
        case 'q': bit = kBlackQueenside; break;
        default: throw MalformedFen(std::string("bad castling character '") + c + "'");
      }
      if (pos.castling_ & bit) throw MalformedFen("duplicate castling right");
      pos.castling_ |= bit;
    }
  }

  if (fields[3] != "-") {
    auto sq = parse_square(fields[3]);
    if (!sq) throw MalformedFen("bad en-passant square '" + std::string(fields[3]) + "'");
    const int want = pos.side_ == Color::Black ? 2 : 5;
    if (rank_of(*sq) != want) throw MalformedFen("en-passant square on wrong rank for side to move");
    pos.ep_ = *sq;
  }

  auto half = parse_int(fields[4]);
  auto full = parse_int(fields[5]);
  if (!half || *half < 0) throw MalformedFen("bad halfmove clock");
  if (!full || *full < 1) throw MalformedFen("bad fullmove number");
  pos.halfmove_ = *half;
  pos.fullmove_ = *full;

  pos.validate();
  return pos;
}

std::string to_fen(const Position& pos) {
  std::string out;
  out.reserve(90);
  for (int rank = 7; rank >= 0; --rank) {
    int gap = 0;
    for (int file = 0; file < 8; ++file) {
      const Piece p = pos.at(make_square(file, rank));
      if (p.empty()) {
        ++gap;
        continue;
      }
      if (gap) out.push_back(static_cast<char>('0' + gap));
      gap = 0;
      out.push_back(fen_char(p));
    }
    if (gap) out.push_back(static_cast<char>('0' + gap));
    if (rank) out.push_back('/');
  }
  out += pos.side_to_move() == Color::White ? " w " : " b ";
  const auto cr = pos.castling_rights();
  if (!cr) out.push_back('-');
  if (cr & kWhiteKingside) out.push_back('K');
  if (cr & kWhiteQueenside) out.push_back('Q');
  if (cr & kBlackKingside) out.push_back('k');
  if (cr & kBlackQueenside) out.push_back('q');
  out.push_back(' ');
  out += pos.en_passant() ? square_name(*pos.en_passant()) : "-";
  out += ' ' + std::to_string(pos.halfmove_clock()) + ' ' + std::to_string(pos.fullmove_number());
  return out;
}

}  // namespace chessrl::chess
