#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "chessrl/chess/movegen.hpp"

namespace chessrl::chess {

/// Canonical SAN with minimal disambiguation and +/# suffix.
/// Throws IllegalMove if `mv` is not legal in `pos`.
std::string canonical_san(const Position& pos, const Move& mv);

/// Resolves a SAN string against the legal moves of `pos`. Check and mate
/// suffixes and trailing annotation glyphs (!, ?) are optional; a capture
/// marker, when present, must match. Throws UnknownSan or AmbiguousSan.
Move parse_san(const Position& pos, std::string_view text);

std::string uci_of(const Move& mv);

/// Resolves "e2e4" / "e7e8q" against the legal moves of `pos`. Throws UnknownUci.
Move parse_uci_move(const Position& pos, std::string_view text);

/// PGN movetext for `moves` played from `start`, e.g. "1. e4 e5 2. Nf3" or
/// "35... Kg7 36. Qe5+". Throws IllegalMove on an illegal entry.
std::string pgn_movetext(const Position& start, const std::vector<Move>& moves);

/// Parses a movetext fragment (numbers, comments, NAGs and result tokens are
/// skipped). Throws MalformedPgn naming the offending token.
std::vector<Move> parse_pgn_movetext(const Position& start, std::string_view text);

}  // namespace chessrl::chess
