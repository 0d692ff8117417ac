#include "chessrl/critic/heuristic.hpp"

#include <algorithm>

namespace chessrl::critic {
namespace {

constexpr int kInfinity = 1'000'000;

int piece_value(chess::PieceKind kind) {
  switch (kind) {
    case chess::PieceKind::Pawn: return 100;
    case chess::PieceKind::Knight: return 300;
    case chess::PieceKind::Bishop: return 300;
    case chess::PieceKind::Rook: return 500;
    case chess::PieceKind::Queen: return 900;
    default: return 0;
  }
}

}  // namespace

int static_eval(const chess::Position& pos) {
  int white = 0;
  for (int sq = 0; sq < 64; ++sq) {
    const chess::Piece p = pos.at(static_cast<chess::Square>(sq));
    if (p.empty()) continue;
    white += p.color == chess::Color::White ? piece_value(p.kind) : -piece_value(p.kind);
  }
  white += chess::mobility(pos, chess::Color::White) - chess::mobility(pos, chess::Color::Black);
  return pos.side_to_move() == chess::Color::White ? white : -white;
}

int negamax(const chess::Position& pos, int depth, int alpha, int beta, int ply) {
  const auto moves = chess::generate_legal(pos);
  if (moves.empty()) return pos.in_check() ? -mate_cp(ply / 2 + 1) : 0;
  if (depth <= 0) return static_eval(pos);
  int best = -kInfinity;
  for (const auto& mv : moves) {
    const int s = -negamax(pos.play_unchecked(mv), depth - 1, -beta, -alpha, ply + 1);
    best = std::max(best, s);
    alpha = std::max(alpha, s);
    if (alpha >= beta) break;
  }
  return best;
}

HeuristicCritic::HeuristicCritic(int depth) : depth_(std::max(depth, 0)) {}

std::string HeuristicCritic::id() const { return "heuristic-d" + std::to_string(depth_); }

int HeuristicCritic::score_cp(const chess::Position& pos, const chess::Move& mv) const {
  require_legal(pos, mv);
  return -negamax(pos.play_unchecked(mv), depth_, -kInfinity, kInfinity, 0);
}

CriticScore HeuristicCritic::score(const chess::Position& pos, const chess::Move& mv) const {
  return {win_probability(score_cp(pos, mv)), id(), static_cast<std::uint64_t>(depth_)};
}

}  // namespace chessrl::critic
