#pragma once

#include <array>
#include <string>
#include <vector>

#include "chessrl/chess/movegen.hpp"

namespace chessrl::grpo {

/// Feature basis of the toy policy, in order: one-hot moved piece kind
/// (pawn, knight, bishop, rook, queen, king), capture, check, promotion,
/// destination centrality, mobility delta, bias.
inline constexpr std::size_t kFeatureDim = 12;

using Features = std::array<double, kFeatureDim>;

const std::array<std::string, kFeatureDim>& feature_names();

/// 1 on the four centre squares, falling linearly to 0 in the corners.
double centrality(chess::Square sq);

/// Features of a legal move. Mobility delta is the change in the mover's
/// pseudo-legal move count, divided by 10.
Features features(const chess::Position& pos, const chess::Move& mv);

/// Features for every move of `moves`, in the same order.
std::vector<Features> feature_matrix(const chess::Position& pos, const chess::MoveList& moves);

}  // namespace chessrl::grpo
