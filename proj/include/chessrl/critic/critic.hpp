#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "chessrl/chess/movegen.hpp"
#include "chessrl/parallel/exec.hpp"

namespace chessrl::critic {

/// Post-move win probability for the side that played the move.
struct CriticScore {
  double value = 0.0;
  std::string backend_id;
  std::uint64_t depth_or_cost = 0;
};

using ScoreMap = std::map<chess::Move, CriticScore>;

/// Action-value backend Q(s, a) in [0, 1].
///
/// Implementations must be deterministic for a fixed configuration and safe
/// to call from several threads at once (backends that wrap a single
/// resource serialize internally).
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string id() const = 0;

  /// Throws IllegalMove if `mv` is not legal in `pos`.
  virtual CriticScore score(const chess::Position& pos, const chess::Move& mv) const = 0;

  /// One entry per legal move.
  virtual ScoreMap score_all(const chess::Position& pos,
                             parallel::Exec exec = parallel::Exec::Serial) const;
};

/// Memoizes another backend's per-move scores. Useful when rank rewards
/// re-score every legal move of the same position many times.
class MemoBackend final : public Backend {
 public:
  explicit MemoBackend(std::shared_ptr<const Backend> inner) : inner_(std::move(inner)) {}

  std::string id() const override { return inner_->id(); }
  CriticScore score(const chess::Position& pos, const chess::Move& mv) const override;
  std::size_t cached() const;

 private:
  std::shared_ptr<const Backend> inner_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<std::string, chess::Move>, CriticScore> cache_;
};

/// Elo-style logistic: 1 / (1 + 10^(-cp/400)).
double win_probability(double cp);

/// Mate-in-n (n moves, n >= 1) as a centipawn magnitude: 10000 - n.
inline constexpr int kMateScore = 10000;

inline constexpr int mate_cp(int moves) { return kMateScore - moves; }

/// Throws IllegalMove unless `mv` is legal.
void require_legal(const chess::Position& pos, const chess::Move& mv);

}  // namespace chessrl::critic
