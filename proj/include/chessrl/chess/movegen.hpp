#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chessrl/chess/position.hpp"

namespace chessrl::chess {

/// A legal move together with both of its spellings in the position it was
/// generated for.
struct NotatedMove {
  Move move;
  std::string san;
  std::string uci;

  friend bool operator==(const NotatedMove&, const NotatedMove&) = default;
};

/// Legal moves sorted by canonical SAN (byte-wise ascending).
using MoveList = std::vector<NotatedMove>;

/// Legal moves in generation order, without notation. This is the fast path
/// used by search and perft; the order is deterministic but unspecified.
std::vector<Move> generate_legal(const Position& pos);

/// Pseudo-legal move count for `side` ignoring castling and en passant.
/// Does not depend on whose turn it is.
int mobility(const Position& pos, Color side);

/// Legal moves with SAN and UCI, ordered by SAN.
MoveList legal_moves(const Position& pos);

bool is_legal(const Position& pos, const Move& mv);

/// Successor after a legal move. Throws IllegalMove otherwise.
Position apply_move(const Position& pos, const Move& mv);

bool is_checkmate(const Position& pos);
bool is_stalemate(const Position& pos);

/// Leaf count of the legal game tree at exactly `depth` plies.
std::uint64_t perft(const Position& pos, int depth);

}  // namespace chessrl::chess
