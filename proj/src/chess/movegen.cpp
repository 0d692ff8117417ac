#include "chessrl/chess/movegen.hpp"

#include <algorithm>

#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"

namespace chessrl::chess {

namespace {

constexpr int kKnightSteps[8][2] = {{1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}};
constexpr int kKingSteps[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
constexpr int kRookDirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
constexpr int kBishopDirs[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
constexpr PieceKind kPromotions[4] = {PieceKind::Queen, PieceKind::Rook, PieceKind::Bishop, PieceKind::Knight};

constexpr bool on_board(int file, int rank) { return file >= 0 && file < 8 && rank >= 0 && rank < 8; }

// Pseudo-legal generation for `side`. Castling and en passant are only
// produced when `side` is to move.
template <typename Sink>
void generate_pseudo(const Position& pos, Color side, bool special, Sink&& sink) {
  const int forward = side == Color::White ? 1 : -1;
  const int start_rank = side == Color::White ? 1 : 6;
  const int last_rank = side == Color::White ? 7 : 0;

  auto target_ok = [&](Square to) {
    const Piece p = pos.at(to);
    return p.empty() || p.color != side;
  };

  for (Square from = 0; from < 64; ++from) {
    const Piece piece = pos.at(from);
    if (piece.empty() || piece.color != side) continue;
    const int f = file_of(from);
    const int r = rank_of(from);

    switch (piece.kind) {
      case PieceKind::Pawn: {
        auto emit_pawn = [&](Square to) {
          if (rank_of(to) == last_rank) {
            for (PieceKind promo : kPromotions) sink(Move{from, to, promo});
          } else {
            sink(Move{from, to, PieceKind::None});
          }
        };
        const int r1 = r + forward;
        if (on_board(f, r1) && pos.at(make_square(f, r1)).empty()) {
          emit_pawn(make_square(f, r1));
          const int r2 = r + 2 * forward;
          if (r == start_rank && pos.at(make_square(f, r2)).empty()) sink(Move{from, make_square(f, r2), PieceKind::None});
        }
        for (int df : {-1, 1}) {
          if (!on_board(f + df, r1)) continue;
          const Square to = make_square(f + df, r1);
          const Piece victim = pos.at(to);
          if (!victim.empty() && victim.color != side) {
            emit_pawn(to);
          } else if (special && pos.en_passant() && *pos.en_passant() == to) {
            sink(Move{from, to, PieceKind::None});
          }
        }
        break;
      }
      case PieceKind::Knight:
        for (const auto& s : kKnightSteps) {
          if (!on_board(f + s[0], r + s[1])) continue;
          const Square to = make_square(f + s[0], r + s[1]);
          if (target_ok(to)) sink(Move{from, to, PieceKind::None});
        }
        break;
      case PieceKind::King:
        for (const auto& s : kKingSteps) {
          if (!on_board(f + s[0], r + s[1])) continue;
          const Square to = make_square(f + s[0], r + s[1]);
          if (target_ok(to)) sink(Move{from, to, PieceKind::None});
        }
        break;
      default: {
        auto slide = [&](const int (&dirs)[4][2]) {
          for (const auto& d : dirs) {
            int ff = f + d[0];
            int rr = r + d[1];
            while (on_board(ff, rr)) {
              const Square to = make_square(ff, rr);
              const Piece p = pos.at(to);
              if (p.empty()) {
                sink(Move{from, to, PieceKind::None});
              } else {
                if (p.color != side) sink(Move{from, to, PieceKind::None});
                break;
              }
              ff += d[0];
              rr += d[1];
            }
          }
        };
        if (piece.kind == PieceKind::Rook || piece.kind == PieceKind::Queen) slide(kRookDirs);
        if (piece.kind == PieceKind::Bishop || piece.kind == PieceKind::Queen) slide(kBishopDirs);
        break;
      }
    }
  }

  if (!special) return;

  // Castling: rights imply king and rook on their home squares.
  const auto rights = pos.castling_rights();
  const int home = side == Color::White ? 0 : 7;
  const Color enemy = opposite(side);
  const std::uint8_t ks = side == Color::White ? kWhiteKingside : kBlackKingside;
  const std::uint8_t qs = side == Color::White ? kWhiteQueenside : kBlackQueenside;
  const Square king = make_square(4, home);
  if ((rights & (ks | qs)) && !pos.is_attacked(king, enemy)) {
    auto empty = [&](int file) { return pos.at(make_square(file, home)).empty(); };
    auto safe = [&](int file) { return !pos.is_attacked(make_square(file, home), enemy); };
    if ((rights & ks) && empty(5) && empty(6) && safe(5) && safe(6))
      sink(Move{king, make_square(6, home), PieceKind::None});
    if ((rights & qs) && empty(3) && empty(2) && empty(1) && safe(3) && safe(2))
      sink(Move{king, make_square(2, home), PieceKind::None});
  }
}

}  // namespace

std::vector<Move> generate_legal(const Position& pos) {
  std::vector<Move> out;
  out.reserve(64);
  const Color side = pos.side_to_move();
  generate_pseudo(pos, side, true, [&](const Move& mv) {
    const Position next = pos.play_unchecked(mv);
    if (!next.is_attacked(next.king_square(side), opposite(side))) out.push_back(mv);
  });
  return out;
}

int mobility(const Position& pos, Color side) {
  int n = 0;
  generate_pseudo(pos, side, false, [&](const Move&) { ++n; });
  return n;
}

bool is_legal(const Position& pos, const Move& mv) {
  const auto moves = generate_legal(pos);
  return std::find(moves.begin(), moves.end(), mv) != moves.end();
}

Position apply_move(const Position& pos, const Move& mv) {
  if (!is_legal(pos, mv)) throw IllegalMove(uci_of(mv) + " is not legal in " + to_fen(pos));
  return pos.play_unchecked(mv);
}

bool is_checkmate(const Position& pos) { return pos.in_check() && generate_legal(pos).empty(); }
bool is_stalemate(const Position& pos) { return !pos.in_check() && generate_legal(pos).empty(); }

std::uint64_t perft(const Position& pos, int depth) {
  if (depth <= 0) return 1;
  const auto moves = generate_legal(pos);
  if (depth == 1) return moves.size();
  std::uint64_t total = 0;
  for (const Move& mv : moves) total += perft(pos.play_unchecked(mv), depth - 1);
  return total;
}

}  // namespace chessrl::chess
