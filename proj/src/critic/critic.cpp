#include "chessrl/critic/critic.hpp"

#include <cmath>

#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"

namespace chessrl::critic {

double win_probability(double cp) { return 1.0 / (1.0 + std::pow(10.0, -cp / 400.0)); }

void require_legal(const chess::Position& pos, const chess::Move& mv) {
  if (!chess::is_legal(pos, mv))
    throw IllegalMove(chess::uci_of(mv) + " is not legal in " + chess::to_fen(pos));
}

ScoreMap Backend::score_all(const chess::Position& pos, parallel::Exec exec) const {
  const auto moves = chess::generate_legal(pos);
  auto scores = parallel::map_index<CriticScore>(exec, moves.size(),
                                                 [&](std::size_t i) { return score(pos, moves[i]); });
  ScoreMap out;
  for (std::size_t i = 0; i < moves.size(); ++i) out.emplace(moves[i], std::move(scores[i]));
  return out;
}

CriticScore MemoBackend::score(const chess::Position& pos, const chess::Move& mv) const {
  auto key = std::make_pair(chess::to_fen(pos), mv);
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  // Scored outside the lock; a racing duplicate computes the same value.
  auto s = inner_->score(pos, mv);
  std::lock_guard lock(mu_);
  return cache_.emplace(std::move(key), std::move(s)).first->second;
}

std::size_t MemoBackend::cached() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

}  // namespace chessrl::critic
