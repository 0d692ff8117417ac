#pragma once

#include <cstdint>

#include "chessrl/chess/position.hpp"
#include "chessrl/parallel/exec.hpp"

namespace chessrl::parallel {

/// Perft split over root moves. Exec::Serial is chess::perft.
std::uint64_t perft(const chess::Position& pos, int depth, Exec exec);

}  // namespace chessrl::parallel
