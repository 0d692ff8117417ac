#include "chessrl/grpo/features.hpp"

#include <algorithm>
#include <cmath>

namespace chessrl::grpo {

const std::array<std::string, kFeatureDim>& feature_names() {
  static const std::array<std::string, kFeatureDim> names = {
      "pawn", "knight", "bishop", "rook", "queen", "king",
      "capture", "check", "promotion", "centrality", "mobility_delta", "bias"};
  return names;
}

double centrality(chess::Square sq) {
  const double df = std::abs(chess::file_of(sq) - 3.5);
  const double dr = std::abs(chess::rank_of(sq) - 3.5);
  return (3.5 - std::max(df, dr)) / 3.0;
}

Features features(const chess::Position& pos, const chess::Move& mv) {
  Features f{};
  const chess::Piece piece = pos.at(mv.from);
  const auto kind = static_cast<int>(piece.kind);
  if (kind >= 1 && kind <= 6) f[static_cast<std::size_t>(kind - 1)] = 1.0;
  const auto succ = pos.play_unchecked(mv);
  f[6] = pos.is_capture(mv) ? 1.0 : 0.0;
  f[7] = succ.in_check() ? 1.0 : 0.0;
  f[8] = mv.promotion != chess::PieceKind::None ? 1.0 : 0.0;
  f[9] = centrality(mv.to);
  f[10] = (chess::mobility(succ, piece.color) - chess::mobility(pos, piece.color)) / 10.0;
  f[11] = 1.0;
  return f;
}

std::vector<Features> feature_matrix(const chess::Position& pos, const chess::MoveList& moves) {
  std::vector<Features> out;
  out.reserve(moves.size());
  for (const auto& nm : moves) out.push_back(features(pos, nm.move));
  return out;
}

}  // namespace chessrl::grpo
