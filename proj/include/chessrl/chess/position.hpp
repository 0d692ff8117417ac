#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "chessrl/chess/types.hpp"

namespace chessrl::chess {

inline constexpr std::string_view kStartFen =
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

/// Full game state. Always valid once constructed: one king per side, no
/// pawns on the back ranks, en-passant square consistent with side to move.
/// Instances are immutable from the outside; successors come from
/// `apply_move` / `Position::play_unchecked`.
class Position {
 public:
  /// Standard initial position.
  Position();

  static Position start() { return Position(); }

  Piece at(Square sq) const { return board_[sq]; }
  Color side_to_move() const { return side_; }
  std::uint8_t castling_rights() const { return castling_; }
  std::optional<Square> en_passant() const { return ep_; }
  int halfmove_clock() const { return halfmove_; }
  int fullmove_number() const { return fullmove_; }

  Square king_square(Color c) const { return kings_[static_cast<int>(c)]; }

  /// True if any piece of `by` attacks `sq`.
  bool is_attacked(Square sq, Color by) const;
  bool in_check() const { return is_attacked(king_square(side_), opposite(side_)); }

  /// Successor position. Assumes `mv` is at least pseudo-legal; callers that
  /// cannot guarantee that use `apply_move`.
  Position play_unchecked(const Move& mv) const;

  /// True if `mv` captures something (including en passant).
  bool is_capture(const Move& mv) const;
  bool is_castling(const Move& mv) const;

  friend bool operator==(const Position&, const Position&) = default;

 private:
  friend Position parse_fen(std::string_view text);

  struct Empty {};
  explicit Position(Empty);

  void put(Square sq, Piece p);
  void validate() const;

  std::array<Piece, 64> board_{};
  std::array<Square, 2> kings_{};
  Color side_ = Color::White;
  std::uint8_t castling_ = 0;
  std::optional<Square> ep_;
  int halfmove_ = 0;
  int fullmove_ = 1;
};

/// Parses a 6-field FEN. Throws MalformedFen or IllegalPosition.
Position parse_fen(std::string_view text);

/// Canonical 6-field FEN.
std::string to_fen(const Position& pos);

}  // namespace chessrl::chess
