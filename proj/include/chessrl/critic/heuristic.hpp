#pragma once

#include "chessrl/critic/critic.hpp"

namespace chessrl::critic {

/// Material (100/300/300/500/900) plus one centipawn per pseudo-legal move,
/// both as white-minus-black, returned from the side to move's perspective.
/// Does not look for mate.
int static_eval(const chess::Position& pos);

/// Fixed-depth negamax with alpha-beta over `static_eval`. Returns the score
/// of `pos` for its side to move. Positions with no legal moves score as
/// mate or zero at any depth; `ply` is the distance from the search root and
/// sets the mate distance.
int negamax(const chess::Position& pos, int depth, int alpha, int beta, int ply = 0);

/// Scores a move by searching the successor `depth` further plies. Depth 0
/// is a static evaluation of the successor (mate and stalemate are still
/// recognized).
class HeuristicCritic final : public Backend {
 public:
  explicit HeuristicCritic(int depth = 2);

  std::string id() const override;
  int depth() const { return depth_; }

  CriticScore score(const chess::Position& pos, const chess::Move& mv) const override;

  /// Mover-perspective centipawns for `mv`.
  int score_cp(const chess::Position& pos, const chess::Move& mv) const;

 private:
  int depth_;
};

}  // namespace chessrl::critic
