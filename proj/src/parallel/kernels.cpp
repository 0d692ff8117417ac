#include "chessrl/parallel/kernels.hpp"

#include <numeric>

#include "chessrl/chess/movegen.hpp"

namespace chessrl::parallel {

std::uint64_t perft(const chess::Position& pos, int depth, Exec exec) {
  if (exec == Exec::Serial || depth < 2) return chess::perft(pos, depth);
  const auto moves = chess::generate_legal(pos);
  const auto counts = map_index<std::uint64_t>(exec, moves.size(), [&](std::size_t i) {
    return chess::perft(pos.play_unchecked(moves[i]), depth - 1);
  });
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

}  // namespace chessrl::parallel
