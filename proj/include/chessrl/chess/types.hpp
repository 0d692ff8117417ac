#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace chessrl::chess {

enum class Color : std::uint8_t { White = 0, Black = 1 };

constexpr Color opposite(Color c) { return c == Color::White ? Color::Black : Color::White; }

enum class PieceKind : std::uint8_t { None = 0, Pawn, Knight, Bishop, Rook, Queen, King };

/// Square index 0..63, a1 = 0, h1 = 7, a8 = 56.
using Square = std::uint8_t;

constexpr int file_of(Square sq) { return sq & 7; }
constexpr int rank_of(Square sq) { return sq >> 3; }
constexpr Square make_square(int file, int rank) { return static_cast<Square>(rank * 8 + file); }

std::string square_name(Square sq);
std::optional<Square> parse_square(std::string_view text);

/// Piece stored on a board square. kind == None means empty.
struct Piece {
  Color color = Color::White;
  PieceKind kind = PieceKind::None;

  constexpr bool empty() const { return kind == PieceKind::None; }
  friend constexpr bool operator==(const Piece&, const Piece&) = default;
};

/// Upper-case SAN letter for a non-pawn piece ('N', 'B', ...); '\0' for pawns.
char san_letter(PieceKind kind);
/// FEN character: upper case for white.
char fen_char(Piece piece);

/// Castling rights bits.
enum CastlingBits : std::uint8_t {
  kWhiteKingside = 1,
  kWhiteQueenside = 2,
  kBlackKingside = 4,
  kBlackQueenside = 8,
};

/// A move in coordinate form. Identity is (from, to, promotion); SAN and UCI
/// spellings are derived from a position (see notation.hpp).
struct Move {
  Square from = 0;
  Square to = 0;
  PieceKind promotion = PieceKind::None;

  friend constexpr auto operator<=>(const Move&, const Move&) = default;
};

}  // namespace chessrl::chess
